#include "lbc/odometry.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>

namespace lbc {

Pose relative_pose(const Trajectory& traj, int tau, int kappa) {
  if (kappa < 1 || tau - kappa < 0 || tau >= traj.size()) {
    throw Error("relative_pose: invalid window tau=" + std::to_string(tau) +
                " kappa=" + std::to_string(kappa));
  }
  return inverse(traj.poses[tau]) * traj.poses[tau - kappa];
}

Trajectory read_kitti_poses(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Trajectory traj;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream ss(line);
    double v[12];
    for (double& x : v) {
      if (!(ss >> x)) {
        throw Error(path.string() + ":" + std::to_string(lineno) +
                    ": expected 12 values per pose line");
      }
    }
    double extra;
    if (ss >> extra) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": trailing values");
    }
    Pose p;
    // clang-format off
    p.rotation << v[0], v[1], v[2],
                  v[4], v[5], v[6],
                  v[8], v[9], v[10];
    // clang-format on
    p.translation << v[3], v[7], v[11];
    traj.poses.push_back(p);
  }
  if (traj.poses.empty()) throw Error(path.string() + ": no poses");
  return traj;
}

void write_kitti_poses(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  for (const Pose& p : traj.poses) {
    const Eigen::Matrix3d& r = p.rotation;
    const Eigen::Vector3d& t = p.translation;
    for (int row = 0; row < 3; ++row) {
      out << r(row, 0) << ' ' << r(row, 1) << ' ' << r(row, 2) << ' ' << t(row);
      out << (row == 2 ? '\n' : ' ');
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

KnnIndex build_keypoint_index(const PointFrame& frame, const KeypointSet& keys) {
  std::vector<Eigen::Vector3d> positions;
  positions.reserve(keys.indices.size());
  for (int idx : keys.indices) positions.push_back(frame.points[idx]);
  return KnnIndex(std::move(positions));
}

std::vector<Match> match_points(const PointFrame& current, const KeypointSet& current_keys,
                                const PointFrame& target, const KeypointSet& target_keys,
                                const KnnIndex& target_index, const Pose& seed,
                                double max_dist) {
  std::vector<Match> matches;
  matches.reserve(current_keys.indices.size());
  for (int idx : current_keys.indices) {
    const Eigen::Vector3d p = current.points[idx];
    const int j = target_index.nearest_within(seed * p, max_dist);
    if (j < 0) continue;
    const int target_idx = target_keys.indices[j];

    Match m;
    m.source_index = idx;
    m.source_point = p;
    m.target_point = target.points[target_idx];
    const bool planar = target_keys.rules[j] == KeypointRule::kPlanar &&
                        target.has_stats() && !target.stats[target_idx].degenerate;
    if (planar) {
      m.type = MatchType::kPlane;
      m.target_normal = target.stats[target_idx].normal;
    }
    matches.push_back(m);
  }
  if (matches.size() < 30) {
    throw TooFewMatchesError("match_points: only " + std::to_string(matches.size()) +
                             " matches, SE(3) problem under-constrained");
  }
  return matches;
}

double whitened_error(const Match& match, const Pose& pose, double point_sigma) {
  const Eigen::Vector3d e = match.target_point - pose * match.source_point;
  if (match.type == MatchType::kPlane) return std::abs(match.target_normal.dot(e));
  return e.norm() / point_sigma;
}

namespace {

// d(T p)/d(delta) for a left perturbation exp(delta^) T is [I, -skew(Tp)];
// the error e = q - T p therefore has de/d(delta) = [-I, skew(Tp)].
inline Eigen::Matrix<double, 3, 6> error_jacobian(const Eigen::Vector3d& tp) {
  Eigen::Matrix<double, 3, 6> j;
  j.leftCols<3>() = -Eigen::Matrix3d::Identity();
  j.rightCols<3>() = skew(tp);
  return j;
}

}  // namespace

Vector6d whitened_error_gradient(const Match& match, const Pose& pose,
                                 double point_sigma) {
  const Eigen::Vector3d tp = pose * match.source_point;
  const Eigen::Vector3d e = match.target_point - tp;
  const Eigen::Matrix<double, 3, 6> de = error_jacobian(tp);
  if (match.type == MatchType::kPlane) {
    const double r = match.target_normal.dot(e);
    if (r == 0.0) return Vector6d::Zero();
    const double sign = r > 0.0 ? 1.0 : -1.0;
    return sign * de.transpose() * match.target_normal;
  }
  const double norm = e.norm();
  if (norm == 0.0) return Vector6d::Zero();
  return de.transpose() * e / (norm * point_sigma);
}

double robust_cost(double u) { return 0.5 * u * u / (1.0 + u * u); }

double geman_mcclure_weight(double u) {
  const double d = 1.0 + u * u;
  return 1.0 / (d * d);
}

namespace {

using Matrix6d = Eigen::Matrix<double, 6, 6>;

double measurement_cost(const std::vector<Match>& matches, const Pose& pose,
                        double sigma) {
  double c = 0.0;
  for (const Match& m : matches) c += robust_cost(whitened_error(m, pose, sigma));
  return c;
}

}  // namespace

PoseEstimate estimate_pose(const std::vector<Match>& matches, const Pose& seed,
                           const EstimateOptions& options) {
  if (matches.size() < 30) {
    throw TooFewMatchesError("estimate_pose: need at least 30 matches, got " +
                             std::to_string(matches.size()));
  }
  const double sigma = options.point_sigma;

  PoseEstimate out;
  EstimateDiagnostics& diag = out.diagnostics;

  // Prior strength is frozen at the seed so the objective stays fixed
  // across iterations.
  double mean_weight = 0.0;
  for (const Match& m : matches) {
    mean_weight += geman_mcclure_weight(whitened_error(m, seed, sigma));
  }
  mean_weight /= static_cast<double>(matches.size());
  const double lambda = options.prior_weight * mean_weight;

  const Pose seed_inv = inverse(seed);
  const auto objective = [&](const Pose& pose) {
    double c = measurement_cost(matches, pose, sigma);
    try {
      const Twist dev = log_map(pose * seed_inv);
      c += 0.5 * lambda * dev.vector().squaredNorm();
    } catch (const CutLocusError&) {
      return std::numeric_limits<double>::infinity();
    }
    return c;
  };

  Pose pose = seed;
  double cost = objective(pose);
  diag.cost_history.push_back(cost);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    Matrix6d h_meas = Matrix6d::Zero();
    Vector6d g = Vector6d::Zero();
    for (const Match& m : matches) {
      const Eigen::Vector3d tp = pose * m.source_point;
      const Eigen::Vector3d e = m.target_point - tp;
      const Eigen::Matrix<double, 3, 6> de = error_jacobian(tp);
      if (m.type == MatchType::kPlane) {
        const double r = m.target_normal.dot(e);
        const Eigen::Matrix<double, 1, 6> j = m.target_normal.transpose() * de;
        const double w = geman_mcclure_weight(std::abs(r));
        h_meas.noalias() += w * j.transpose() * j;
        g.noalias() += w * j.transpose() * r;
      } else {
        const Eigen::Vector3d v = e / sigma;
        const Eigen::Matrix<double, 3, 6> j = de / sigma;
        const double w = geman_mcclure_weight(v.norm());
        h_meas.noalias() += w * j.transpose() * j;
        g.noalias() += w * j.transpose() * v;
      }
    }

    Eigen::SelfAdjointEigenSolver<Matrix6d> es(h_meas);
    const double lmin = es.eigenvalues()(0);
    const double lmax = es.eigenvalues()(5);
    diag.hessian_condition = (lmin > 0.0 && lmax > 0.0)
                                 ? lmax / lmin
                                 : std::numeric_limits<double>::infinity();
    if (!(diag.hessian_condition < options.condition_limit)) {
      diag.singular = true;
      out.pose = seed;
      diag.final_cost = objective(seed);
      diag.inlier_count = 0;
      for (const Match& m : matches) {
        if (whitened_error(m, seed, sigma) < 1.0) ++diag.inlier_count;
      }
      return out;
    }

    const Twist dev = log_map(pose * seed_inv);
    const Matrix6d h = h_meas + lambda * Matrix6d::Identity();
    const Vector6d rhs = -(g + lambda * dev.vector());
    const Vector6d delta = h.ldlt().solve(rhs);

    double alpha = 1.0;
    Pose candidate;
    double candidate_cost = std::numeric_limits<double>::infinity();
    for (int halving = 0; halving < 25; ++halving) {
      candidate = exp_map(Twist::FromVector(alpha * delta)) * pose;
      candidate_cost = objective(candidate);
      if (candidate_cost <= cost) break;
      alpha *= 0.5;
    }
    diag.iterations = iter + 1;
    if (candidate_cost > cost) {
      diag.converged = true;  // no descent direction left
      break;
    }
    pose = candidate;
    cost = candidate_cost;
    diag.cost_history.push_back(cost);
    if ((alpha * delta).norm() < options.update_tolerance) {
      diag.converged = true;
      break;
    }
  }

  out.pose = pose;
  diag.final_cost = cost;
  diag.inlier_count = 0;
  for (const Match& m : matches) {
    if (whitened_error(m, pose, sigma) < 1.0) ++diag.inlier_count;
  }
  return out;
}

namespace {

struct PreparedFrame {
  PointFrame frame;
  KeypointSet keys;
  KnnIndex index;
};

PreparedFrame prepare_frame(PointFrame&& frame, const OdometryConfig& config) {
  compute_surface_stats(frame, config.knn_k);
  KeypointSet keys = select_keypoints(frame, config.keypoint_fraction, config.ground_height);
  KnnIndex index = build_keypoint_index(frame, keys);
  return PreparedFrame{std::move(frame), std::move(keys), std::move(index)};
}

}  // namespace

OdometryResult run_odometry(const FrameSource& source, int frame_count,
                            const OdometryConfig& config) {
  if (frame_count < 2) throw Error("run_odometry: need at least 2 frames");

  OdometryResult result;
  result.trajectory.frame_period = config.frame_period;
  result.trajectory.poses.reserve(frame_count);
  result.frames.reserve(frame_count);

  EstimateOptions eopts;
  eopts.point_sigma = config.point_sigma;
  eopts.prior_weight = config.prior_weight;
  eopts.max_iterations = config.max_gn_iterations;
  eopts.update_tolerance = config.update_tolerance;
  eopts.condition_limit = config.condition_limit;

  std::optional<PreparedFrame> previous;
  Pose rel_prev = Pose::Identity();  // last inter-frame motion, maps frame tau -> tau-1
  PoseAccumulator accumulator;

  for (int i = 0; i < frame_count; ++i) {
    FrameDiagnostics diag;
    diag.frame_index = i;

    std::optional<PreparedFrame> current;
    try {
      PointFrame frame = source(i);
      frame.frame_index = i;
      diag.point_count = frame.size();
      current = prepare_frame(std::move(frame), config);
      diag.keypoint_count = current->keys.size();
    } catch (const Error&) {
      diag.source_error = true;
    }

    if (i == 0) {
      result.trajectory.poses.push_back(Pose::Identity());
    } else {
      Pose rel = rel_prev;  // constant-velocity fallback and seed
      if (current && previous) {
        try {
          Pose estimate = rel_prev;
          for (int round = 0; round <= config.rematch_rounds; ++round) {
            const auto matches =
                match_points(current->frame, current->keys, previous->frame,
                             previous->keys, previous->index, estimate,
                             config.max_match_dist);
            diag.match_count = static_cast<int>(matches.size());
            const PoseEstimate pe = estimate_pose(matches, estimate, eopts);
            diag.iterations += pe.diagnostics.iterations;
            diag.final_cost = pe.diagnostics.final_cost;
            diag.hessian_condition = pe.diagnostics.hessian_condition;
            if (pe.diagnostics.singular) {
              diag.singular = true;
              break;
            }
            estimate = pe.pose;
          }
          if (!diag.singular) rel = estimate;
        } catch (const TooFewMatchesError&) {
          diag.too_few_matches = true;
        }
      } else if (!diag.source_error) {
        // current frame fine but no previous frame to match against
        diag.too_few_matches = true;
      }
      result.trajectory.poses.push_back(accumulator.append(rel));
      rel_prev = rel;
    }

    previous = std::move(current);
    result.frames.push_back(std::move(diag));
  }
  return result;
}

OdometryResult run_odometry(const std::vector<PointFrame>& frames,
                            const OdometryConfig& config) {
  return run_odometry([&frames](int i) { return frames[i]; },
                      static_cast<int>(frames.size()), config);
}

}  // namespace lbc
