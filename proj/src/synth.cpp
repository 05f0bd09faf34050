#include "lbc/synth.hpp"

#include <Eigen/Geometry>
#include <json.hpp>

#include <cmath>
#include <fstream>

#include "lbc/rng.hpp"

namespace lbc {

namespace {

using nlohmann::json;

int sample_count(double area, double density) {
  return static_cast<int>(std::llround(area * density));
}

// Samples a rectangle tile by tile so that far-away stretches of large
// planes are skipped instead of sampled and range-filtered.
void sample_rect(SeededRng& rng, double density, const Pose& face_pose, double half_u,
                 double half_v, const Eigen::Vector3d& sensor_pos, double range_cap,
                 std::vector<Eigen::Vector3d>& out) {
  constexpr double kTile = 8.0;
  const int nu = std::max(1, static_cast<int>(std::ceil(2.0 * half_u / kTile)));
  const int nv = std::max(1, static_cast<int>(std::ceil(2.0 * half_v / kTile)));
  const double du = 2.0 * half_u / nu;
  const double dv = 2.0 * half_v / nv;
  const double tile_radius = 0.5 * std::hypot(du, dv);

  for (int iu = 0; iu < nu; ++iu) {
    for (int iv = 0; iv < nv; ++iv) {
      const double u0 = -half_u + iu * du;
      const double v0 = -half_v + iv * dv;
      const Eigen::Vector3d center =
          face_pose * Eigen::Vector3d(u0 + 0.5 * du, v0 + 0.5 * dv, 0.0);
      if ((center - sensor_pos).norm() > range_cap + tile_radius) continue;
      const int count = sample_count(du * dv, density);
      for (int i = 0; i < count; ++i) {
        out.push_back(face_pose * Eigen::Vector3d(u0 + rng.uniform01() * du,
                                                  v0 + rng.uniform01() * dv, 0.0));
      }
    }
  }
}

// World-frame surface samples of one primitive within range of the sensor.
std::vector<Eigen::Vector3d> sample_primitive(const Primitive& prim, double density,
                                              const Eigen::Vector3d& sensor_pos,
                                              double range_cap, SeededRng& rng) {
  std::vector<Eigen::Vector3d> pts;
  const Eigen::Vector3d& e = prim.extent;
  // compact primitives are skipped wholesale when fully out of range
  if (prim.kind != Primitive::Kind::kPlane &&
      (prim.pose.translation - sensor_pos).norm() > range_cap + e.norm()) {
    return pts;
  }
  switch (prim.kind) {
    case Primitive::Kind::kPlane: {
      sample_rect(rng, density, prim.pose, e.x(), e.y(), sensor_pos, range_cap, pts);
      break;
    }
    case Primitive::Kind::kBox: {
      // face frames: local z is the face normal
      struct Face {
        Eigen::Vector3d center, u_axis, v_axis;
        double half_u, half_v;
      };
      const Face faces[6] = {
          {{e.x(), 0, 0}, {0, 1, 0}, {0, 0, 1}, e.y(), e.z()},
          {{-e.x(), 0, 0}, {0, 1, 0}, {0, 0, 1}, e.y(), e.z()},
          {{0, e.y(), 0}, {1, 0, 0}, {0, 0, 1}, e.x(), e.z()},
          {{0, -e.y(), 0}, {1, 0, 0}, {0, 0, 1}, e.x(), e.z()},
          {{0, 0, e.z()}, {1, 0, 0}, {0, 1, 0}, e.x(), e.y()},
          {{0, 0, -e.z()}, {1, 0, 0}, {0, 1, 0}, e.x(), e.y()},
      };
      for (const Face& f : faces) {
        const int count = sample_count(4.0 * f.half_u * f.half_v, density);
        for (int i = 0; i < count; ++i) {
          const Eigen::Vector3d local = f.center +
                                        rng.uniform(-f.half_u, f.half_u) * f.u_axis +
                                        rng.uniform(-f.half_v, f.half_v) * f.v_axis;
          pts.push_back(prim.pose * local);
        }
      }
      break;
    }
    case Primitive::Kind::kCylinder: {
      const double radius = e.x(), half_h = e.z();
      const int count = sample_count(2.0 * M_PI * radius * 2.0 * half_h, density);
      for (int i = 0; i < count; ++i) {
        const double a = rng.uniform(-M_PI, M_PI);
        const double z = rng.uniform(-half_h, half_h);
        pts.push_back(prim.pose *
                      Eigen::Vector3d(radius * std::cos(a), radius * std::sin(a), z));
      }
      break;
    }
  }
  return pts;
}

}  // namespace

PointFrame generate_sweep(const SceneSpec& scene, const Pose& sensor_pose,
                          int frame_index) {
  SeededRng rng(mix_seed(scene.seed, static_cast<uint64_t>(frame_index)));
  const Pose world_to_sensor = inverse(sensor_pose);
  const Eigen::Vector3d sensor_pos = sensor_pose.translation;

  PointFrame frame;
  frame.frame_index = frame_index;
  for (const Primitive& prim : scene.primitives) {
    for (const Eigen::Vector3d& w :
         sample_primitive(prim, scene.point_density, sensor_pos, scene.range_cap, rng)) {
      if ((w - sensor_pos).norm() > scene.range_cap) continue;
      Eigen::Vector3d p = world_to_sensor * w;
      if (scene.noise_std > 0.0) {
        p += Eigen::Vector3d(rng.normal(0.0, scene.noise_std),
                             rng.normal(0.0, scene.noise_std),
                             rng.normal(0.0, scene.noise_std));
      }
      const double r2 = p.squaredNorm();
      if (r2 < 1e-12) continue;
      frame.points.push_back(p);
      frame.intensity.push_back(prim.reflectance / r2);
    }
  }
  if (frame.points.empty()) {
    throw EmptySweepError("generate_sweep: no surface within range of the sensor");
  }
  return frame;
}

std::pair<std::vector<PointFrame>, Trajectory> generate_sequence(
    const SceneSpec& scene, const Trajectory& trajectory) {
  std::vector<PointFrame> frames;
  frames.reserve(trajectory.size());
  for (int i = 0; i < trajectory.size(); ++i) {
    frames.push_back(generate_sweep(scene, trajectory.poses[i], i));
  }
  return {std::move(frames), trajectory};
}

Trajectory inject_bias(const Trajectory& gt, const BiasFunction& bias_fn,
                       const std::vector<FeatureVector>& features) {
  if (static_cast<int>(features.size()) != gt.size()) {
    throw Error("inject_bias: features not aligned with trajectory frames");
  }
  Trajectory out;
  out.frame_period = gt.frame_period;
  out.poses.reserve(gt.size());
  out.poses.push_back(gt.poses.empty() ? Pose::Identity() : gt.poses[0]);

  PoseAccumulator acc(out.poses[0]);
  for (int tau = 1; tau < gt.size(); ++tau) {
    const Twist bias = bias_fn(features[tau]);
    // gt relative motion (frame tau -> tau-1), right-composed with exp(bias)
    // so that the kappa=1 error of the result is exactly exp(bias).
    const Pose gt_rel = inverse(gt.poses[tau - 1]) * gt.poses[tau];
    out.poses.push_back(acc.append(gt_rel * exp_map(bias)));
  }
  return out;
}

Trajectory straight_trajectory(int frame_count, double step_x) {
  Trajectory traj;
  traj.poses.reserve(frame_count);
  for (int i = 0; i < frame_count; ++i) {
    traj.poses.emplace_back(Eigen::Matrix3d::Identity(),
                            Eigen::Vector3d(step_x * i, 0.0, 0.0));
  }
  return traj;
}

namespace {

Pose pose_from_json(const json& j) {
  const auto pos = j.value("position", std::vector<double>{0, 0, 0});
  const auto rpy = j.value("rpy", std::vector<double>{0, 0, 0});
  if (pos.size() != 3 || rpy.size() != 3) {
    throw Error("scene json: position/rpy must have 3 entries");
  }
  const Eigen::Matrix3d r =
      (Eigen::AngleAxisd(rpy[2], Eigen::Vector3d::UnitZ()) *
       Eigen::AngleAxisd(rpy[1], Eigen::Vector3d::UnitY()) *
       Eigen::AngleAxisd(rpy[0], Eigen::Vector3d::UnitX()))
          .toRotationMatrix();
  return Pose(r, Eigen::Vector3d(pos[0], pos[1], pos[2]));
}

json pose_to_json(const Pose& p) {
  // rpy extraction: R = Rz(yaw) Ry(pitch) Rx(roll)
  const Eigen::Vector3d angles = p.rotation.eulerAngles(2, 1, 0);
  return json{{"position", {p.translation.x(), p.translation.y(), p.translation.z()}},
              {"rpy", {angles[2], angles[1], angles[0]}}};
}

Primitive::Kind kind_from_string(const std::string& s) {
  if (s == "plane") return Primitive::Kind::kPlane;
  if (s == "box") return Primitive::Kind::kBox;
  if (s == "cylinder") return Primitive::Kind::kCylinder;
  throw Error("scene json: unknown primitive kind '" + s + "'");
}

std::string kind_to_string(Primitive::Kind k) {
  switch (k) {
    case Primitive::Kind::kPlane: return "plane";
    case Primitive::Kind::kBox: return "box";
    case Primitive::Kind::kCylinder: return "cylinder";
  }
  return "plane";
}

}  // namespace

SceneSpec read_scene_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }

  SceneSpec scene;
  scene.point_density = j.value("point_density", scene.point_density);
  scene.noise_std = j.value("noise_std", scene.noise_std);
  scene.seed = j.value("seed", scene.seed);
  scene.range_cap = j.value("range_cap", scene.range_cap);
  if (scene.point_density <= 0.0) throw Error("scene json: point_density must be > 0");
  if (scene.noise_std < 0.0) throw Error("scene json: noise_std must be >= 0");

  for (const json& pj : j.value("primitives", json::array())) {
    Primitive prim;
    prim.kind = kind_from_string(pj.value("kind", "plane"));
    prim.pose = pose_from_json(pj);
    const auto extent = pj.value("extent", std::vector<double>{1, 1, 1});
    if (extent.size() != 3) throw Error("scene json: extent must have 3 entries");
    prim.extent = Eigen::Vector3d(extent[0], extent[1], extent[2]);
    prim.reflectance = pj.value("reflectance", 1.0);
    scene.primitives.push_back(prim);
  }
  return scene;
}

void write_scene_json(const std::filesystem::path& path, const SceneSpec& scene) {
  json j;
  j["point_density"] = scene.point_density;
  j["noise_std"] = scene.noise_std;
  j["seed"] = scene.seed;
  j["range_cap"] = scene.range_cap;
  j["primitives"] = json::array();
  for (const Primitive& prim : scene.primitives) {
    json pj = pose_to_json(prim.pose);
    pj["kind"] = kind_to_string(prim.kind);
    pj["extent"] = {prim.extent.x(), prim.extent.y(), prim.extent.z()};
    pj["reflectance"] = prim.reflectance;
    j["primitives"].push_back(pj);
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

}  // namespace lbc
