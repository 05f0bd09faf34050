#ifndef LBC_EVALCORRECT_HPP
#define LBC_EVALCORRECT_HPP

#include <Eigen/Core>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lbc/features.hpp"
#include "lbc/liegroup.hpp"
#include "lbc/odometry.hpp"

namespace lbc {

// Windowed odometry error: xi_err = ln(T_gt_rel * T_odom_rel^-1)^vee over
// the window [tau - kappa, tau].
struct ErrorSample {
  int tau = 0;
  int kappa = 1;
  Twist xi_err;
};

// One sample per tau = kappa..N. Trajectories must be index-aligned and of
// equal length >= kappa + 1. Samples whose error rotation sits at the cut
// locus are dropped; dropped (when given) receives their count.
std::vector<ErrorSample> compute_error_samples(const Trajectory& odom,
                                               const Trajectory& gt, int kappa,
                                               int* dropped = nullptr);

// Applies predicted errors as corrections: frames 0..kappa-1 are copied
// unchanged, every later relative pose is left-composed with
// exp(predictions[tau] / kappa). predictions must hold one twist per frame
// (entries below kappa are ignored); throws MissingPredictionError if any
// frame in [kappa, N] lacks one.
Trajectory apply_correction(const Trajectory& odom,
                            const std::vector<Twist>& predictions, int kappa);

// KITTI-style percentage errors over path segments of 100..800 m.
struct SegmentErrorReport {
  std::map<int, double> per_length;  // translational error %, per segment length
  double total = 0.0;                // mean over all segment instances
  int n_segments = 0;
  // diagnostics only: rotational error in rad/m
  std::map<int, double> per_length_rotation;
  double total_rotation = 0.0;

  bool path_too_short() const { return per_length.empty(); }
};

// For each start frame and target length L, the segment ends at the first
// frame where the accumulated ground-truth path length reaches L; the error
// is the translation of the relative-pose discrepancy divided by L. Short
// paths give an empty report.
SegmentErrorReport segment_errors(const Trajectory& odom, const Trajectory& gt);

void write_report_json(const std::filesystem::path& path, const SegmentErrorReport& report);

// CSV with header: tau,kappa,rho1,rho2,rho3,phi1,phi2,phi3
void write_error_csv(const std::filesystem::path& path,
                     const std::vector<ErrorSample>& samples);
std::vector<ErrorSample> read_error_csv(const std::filesystem::path& path);

// Per-DOF regression data. z and pitch use the normal-sum feature (D = 3),
// roll uses the azimuth slices (D = 16).
struct DofData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

struct DofSplit {
  DofData z, pitch, roll;
};

struct SequenceData {
  std::string id;
  std::vector<FeatureVector> features;
  std::vector<ErrorSample> errors;
};

struct TrainingSplit {
  DofSplit train, validation;
};

// Leave-one-sequence-out split. Throws UnknownSequenceError if holdout_id is
// not present, Error if fewer than 2 sequences or features are misaligned
// with the error samples.
TrainingSplit make_training_set(const std::vector<SequenceData>& sequences,
                                const std::string& holdout_id);

}  // namespace lbc

#endif  // LBC_EVALCORRECT_HPP
