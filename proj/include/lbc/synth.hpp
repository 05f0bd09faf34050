#ifndef LBC_SYNTH_HPP
#define LBC_SYNTH_HPP

#include <filesystem>
#include <functional>
#include <utility>
#include <vector>

#include "lbc/features.hpp"
#include "lbc/odometry.hpp"
#include "lbc/pointcloud.hpp"

namespace lbc {

// Surface primitive, posed in the world frame.
//   plane:    rectangle in the local xy plane, extent = (half_x, half_y, -)
//   box:      extent = half-sizes along local axes
//   cylinder: lateral surface, extent = (radius, -, half_height)
struct Primitive {
  enum class Kind { kPlane, kBox, kCylinder };
  Kind kind = Kind::kPlane;
  Pose pose;
  Eigen::Vector3d extent = Eigen::Vector3d::Ones();
  double reflectance = 1.0;
};

struct SceneSpec {
  std::vector<Primitive> primitives;
  double point_density = 50.0;  // points per square meter
  double noise_std = 0.0;       // meters, isotropic
  uint64_t seed = 0;
  double range_cap = 80.0;  // meters, HDL-64E-like reach
};

SceneSpec read_scene_json(const std::filesystem::path& path);
void write_scene_json(const std::filesystem::path& path, const SceneSpec& scene);

// Density-samples primitive surfaces within range_cap of the sensor,
// expresses points in the sensor frame, perturbs them with Gaussian noise,
// and assigns intensity = reflectance / r^2 so that normalized intensity
// I*r^2 recovers the reflectance. Deterministic in (scene.seed, frame_index).
// Throws EmptySweepError when no surface is in range.
PointFrame generate_sweep(const SceneSpec& scene, const Pose& sensor_pose,
                          int frame_index = 0);

// One sweep per pose; returns the frames and the matching ground truth.
std::pair<std::vector<PointFrame>, Trajectory> generate_sequence(
    const SceneSpec& scene, const Trajectory& trajectory);

// Corrupts a ground-truth trajectory so that the per-frame odometry error
// (kappa = 1) of the result equals bias_fn(features[tau]) exactly.
using BiasFunction = std::function<Twist(const FeatureVector&)>;
Trajectory inject_bias(const Trajectory& gt, const BiasFunction& bias_fn,
                       const std::vector<FeatureVector>& features);

// Straight +x trajectory with step_x meters per frame, poses[0] = I.
Trajectory straight_trajectory(int frame_count, double step_x);

}  // namespace lbc

#endif  // LBC_SYNTH_HPP
