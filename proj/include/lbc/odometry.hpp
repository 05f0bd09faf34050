#ifndef LBC_ODOMETRY_HPP
#define LBC_ODOMETRY_HPP

#include <filesystem>
#include <functional>
#include <vector>

#include "lbc/keypoints.hpp"
#include "lbc/liegroup.hpp"
#include "lbc/pointcloud.hpp"

namespace lbc {

enum class MatchType { kPlane, kPoint };

// One keypoint correspondence. source_point is in the current frame,
// target_point/target_normal in the frame being matched against.
struct Match {
  int source_index = -1;
  Eigen::Vector3d source_point = Eigen::Vector3d::Zero();
  Eigen::Vector3d target_point = Eigen::Vector3d::Zero();
  Eigen::Vector3d target_normal = Eigen::Vector3d::Zero();  // unit iff kPlane
  MatchType type = MatchType::kPoint;
};

// Frame-to-origin poses, one per frame index; poses[0] is the identity.
// poses[tau] maps frame-tau coordinates into frame-0 coordinates.
struct Trajectory {
  std::vector<Pose> poses;
  double frame_period = 0.1;  // seconds; the sensor spins at 10 Hz

  int size() const { return static_cast<int>(poses.size()); }
};

// Relative pose change over a window: maps frame (tau-kappa) coordinates
// into frame tau coordinates.
Pose relative_pose(const Trajectory& traj, int tau, int kappa);

// KITTI pose text format: one line per frame, 12 space-separated floats,
// row-major 3x4 [R | t] mapping frame coordinates to frame-0 coordinates.
Trajectory read_kitti_poses(const std::filesystem::path& path);
void write_kitti_poses(const std::filesystem::path& path, const Trajectory& traj);

// Index over the keypoint positions of a frame; neighbor indices returned
// by the index refer to positions in keys.indices.
KnnIndex build_keypoint_index(const PointFrame& frame, const KeypointSet& keys);

// Matches each current keypoint (transformed by seed into the target frame)
// to the nearest target keypoint within max_dist. Match type is kPlane iff
// the target keypoint carries a valid planar tag. Throws TooFewMatchesError
// below 30 matches.
std::vector<Match> match_points(const PointFrame& current, const KeypointSet& current_keys,
                                const PointFrame& target, const KeypointSet& target_keys,
                                const KnnIndex& target_index, const Pose& seed,
                                double max_dist);

// Whitened error norm of a match under a candidate pose:
//   plane: u = |n . (q - T p)|
//   point: u = ||q - T p|| / sigma   (measurement covariance sigma^2 I)
double whitened_error(const Match& match, const Pose& pose, double point_sigma);

// Gradient of the whitened error norm with respect to a left perturbation
// of the pose. Undefined (returns zero) at u = 0.
Vector6d whitened_error_gradient(const Match& match, const Pose& pose, double point_sigma);

// Geman-McClure robust cost rho(u) = u^2 / (2 (1 + u^2)) and its IRLS
// weight w(u) = 1 / (1 + u^2)^2.
double robust_cost(double u);
double geman_mcclure_weight(double u);

struct EstimateOptions {
  double point_sigma = 0.05;   // meters
  double prior_weight = 1e-2;  // relative to the mean measurement weight
  int max_iterations = 50;
  double update_tolerance = 1e-7;
  double condition_limit = 1e12;
};

struct EstimateDiagnostics {
  double final_cost = 0.0;
  int iterations = 0;
  int inlier_count = 0;          // matches with u < 1
  double hessian_condition = 0.0;
  bool singular = false;         // degenerate geometry; pose is the seed
  bool converged = false;
  std::vector<double> cost_history;  // objective after each accepted step
};

struct PoseEstimate {
  Pose pose;
  EstimateDiagnostics diagnostics;
};

// Iteratively reweighted Gauss-Newton over SE(3) with Geman-McClure weights,
// a weak prior pulling toward the seed, and step halving. Flags (and
// returns the seed) when the measurement Hessian condition number exceeds
// condition_limit.
PoseEstimate estimate_pose(const std::vector<Match>& matches, const Pose& seed,
                           const EstimateOptions& options = {});

struct OdometryConfig {
  double keypoint_fraction = 0.05;
  double ground_height = -1.2;  // meters, sensor frame
  int knn_k = 20;
  double max_match_dist = 2.0;  // meters
  double point_sigma = 0.05;
  double prior_weight = 1e-2;
  int rematch_rounds = 2;  // re-matching passes after the first solve
  int max_gn_iterations = 50;
  double update_tolerance = 1e-7;
  double condition_limit = 1e12;
  double frame_period = 0.1;
};

struct FrameDiagnostics {
  int frame_index = 0;
  int point_count = 0;
  int keypoint_count = 0;
  int match_count = 0;
  int iterations = 0;
  double final_cost = 0.0;
  double hessian_condition = 0.0;
  bool too_few_matches = false;
  bool singular = false;
  bool source_error = false;  // frame could not be read/prepared

  bool flagged() const { return too_few_matches || singular || source_error; }
};

struct OdometryResult {
  Trajectory trajectory;
  std::vector<FrameDiagnostics> frames;
};

// Produces frame i on demand; may throw, which flags the frame and falls
// back to constant-velocity extrapolation.
using FrameSource = std::function<PointFrame(int)>;

// Frame-to-frame pipeline: constant-velocity seed, keypoint extraction,
// matching against the previous frame, robust pose estimation, trajectory
// accumulation with poses[0] = I. Requires frame_count >= 2.
OdometryResult run_odometry(const FrameSource& source, int frame_count,
                            const OdometryConfig& config = {});
OdometryResult run_odometry(const std::vector<PointFrame>& frames,
                            const OdometryConfig& config = {});

}  // namespace lbc

#endif  // LBC_ODOMETRY_HPP
