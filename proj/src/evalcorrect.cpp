#include "lbc/evalcorrect.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_map>

namespace lbc {

std::vector<ErrorSample> compute_error_samples(const Trajectory& odom,
                                               const Trajectory& gt, int kappa,
                                               int* dropped) {
  if (odom.size() != gt.size()) {
    throw LengthMismatchError("compute_error_samples: odometry has " +
                              std::to_string(odom.size()) + " poses, ground truth " +
                              std::to_string(gt.size()));
  }
  if (kappa < 1 || odom.size() < kappa + 1) {
    throw LengthMismatchError("compute_error_samples: need at least kappa+1 poses");
  }

  std::vector<ErrorSample> samples;
  samples.reserve(odom.size() - kappa);
  int n_dropped = 0;
  for (int tau = kappa; tau < odom.size(); ++tau) {
    const Pose t_odom = relative_pose(odom, tau, kappa);
    const Pose t_gt = relative_pose(gt, tau, kappa);
    const Pose t_err = t_gt * inverse(t_odom);
    try {
      samples.push_back({tau, kappa, log_map(t_err)});
    } catch (const CutLocusError&) {
      ++n_dropped;
    }
  }
  if (dropped) *dropped = n_dropped;
  return samples;
}

Trajectory apply_correction(const Trajectory& odom,
                            const std::vector<Twist>& predictions, int kappa) {
  if (kappa < 1 || odom.size() < kappa + 1) {
    throw Error("apply_correction: need at least kappa+1 poses");
  }
  if (static_cast<int>(predictions.size()) < odom.size()) {
    throw MissingPredictionError("apply_correction: " +
                                 std::to_string(predictions.size()) +
                                 " predictions for " + std::to_string(odom.size()) +
                                 " frames");
  }

  Trajectory corrected;
  corrected.frame_period = odom.frame_period;
  corrected.poses.reserve(odom.size());
  for (int tau = 0; tau < kappa; ++tau) corrected.poses.push_back(odom.poses[tau]);

  PoseAccumulator acc(corrected.poses.back());
  for (int tau = kappa; tau < odom.size(); ++tau) {
    const Twist scaled(predictions[tau].rho / kappa, predictions[tau].phi / kappa);
    const Pose odom_rel = inverse(odom.poses[tau - 1]) * odom.poses[tau];
    corrected.poses.push_back(acc.append(odom_rel * inverse(exp_map(scaled))));
  }
  return corrected;
}

SegmentErrorReport segment_errors(const Trajectory& odom, const Trajectory& gt) {
  if (odom.size() != gt.size()) {
    throw LengthMismatchError("segment_errors: odometry has " +
                              std::to_string(odom.size()) + " poses, ground truth " +
                              std::to_string(gt.size()));
  }
  static const int kLengths[] = {100, 200, 300, 400, 500, 600, 700, 800};

  std::vector<double> dist(gt.size(), 0.0);
  for (int i = 1; i < gt.size(); ++i) {
    dist[i] = dist[i - 1] +
              (gt.poses[i].translation - gt.poses[i - 1].translation).norm();
  }

  SegmentErrorReport report;
  std::map<int, int> counts;
  for (int first = 0; first < gt.size(); ++first) {
    for (const int len : kLengths) {
      const auto it = std::lower_bound(dist.begin() + first, dist.end(),
                                       dist[first] + len);
      if (it == dist.end()) break;  // longer segments will not fit either
      const int last = static_cast<int>(it - dist.begin());

      const Pose delta_gt = inverse(gt.poses[first]) * gt.poses[last];
      const Pose delta_odom = inverse(odom.poses[first]) * odom.poses[last];
      const Pose err = inverse(delta_odom) * delta_gt;

      report.per_length[len] += 100.0 * err.translation.norm() / len;
      report.per_length_rotation[len] += rotation_angle(err.rotation) / len;
      counts[len] += 1;
    }
  }

  double sum = 0.0, sum_rot = 0.0;
  int n = 0;
  for (auto& [len, value] : report.per_length) {
    sum += value;
    sum_rot += report.per_length_rotation[len];
    n += counts[len];
    value /= counts[len];
    report.per_length_rotation[len] /= counts[len];
  }
  report.n_segments = n;
  report.total = n > 0 ? sum / n : 0.0;
  report.total_rotation = n > 0 ? sum_rot / n : 0.0;
  return report;
}

void write_report_json(const std::filesystem::path& path,
                       const SegmentErrorReport& report) {
  nlohmann::json j;
  j["per_length"] = nlohmann::json::object();
  for (const auto& [len, pct] : report.per_length) {
    j["per_length"][std::to_string(len)] = pct;
  }
  j["total"] = report.total;
  j["n_segments"] = report.n_segments;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

namespace {

constexpr const char* kErrorCsvHeader = "tau,kappa,rho1,rho2,rho3,phi1,phi2,phi3";

}  // namespace

void write_error_csv(const std::filesystem::path& path,
                     const std::vector<ErrorSample>& samples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << kErrorCsvHeader << '\n' << std::setprecision(17);
  for (const ErrorSample& s : samples) {
    out << s.tau << ',' << s.kappa;
    const Vector6d v = s.xi_err.vector();
    for (int i = 0; i < 6; ++i) out << ',' << v[i];
    out << '\n';
  }
}

std::vector<ErrorSample> read_error_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kErrorCsvHeader) {
    throw Error(path.string() + ": bad error CSV header");
  }
  std::vector<ErrorSample> samples;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    ErrorSample s;
    char comma;
    Vector6d v;
    if (!(ss >> s.tau >> comma >> s.kappa) || comma != ',') {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": bad row");
    }
    for (int i = 0; i < 6; ++i) {
      if (!(ss >> comma >> v[i]) || comma != ',') {
        throw Error(path.string() + ":" + std::to_string(lineno) + ": bad row");
      }
    }
    s.xi_err = Twist::FromVector(v);
    samples.push_back(s);
  }
  return samples;
}

TrainingSplit make_training_set(const std::vector<SequenceData>& sequences,
                                const std::string& holdout_id) {
  if (sequences.size() < 2) {
    throw Error("make_training_set: need at least 2 sequences");
  }
  const bool holdout_exists =
      std::any_of(sequences.begin(), sequences.end(),
                  [&](const SequenceData& s) { return s.id == holdout_id; });
  if (!holdout_exists) {
    throw UnknownSequenceError("make_training_set: unknown holdout sequence '" +
                               holdout_id + "'");
  }

  struct Rows {
    std::vector<Eigen::Vector3d> ns;
    std::vector<AzimuthSlices> az;
    std::vector<double> z, pitch, roll;
  };
  Rows train, validation;

  for (const SequenceData& seq : sequences) {
    std::unordered_map<int, const FeatureVector*> by_frame;
    for (const FeatureVector& f : seq.features) by_frame[f.frame_index] = &f;

    Rows& rows = seq.id == holdout_id ? validation : train;
    for (const ErrorSample& s : seq.errors) {
      const auto it = by_frame.find(s.tau);
      if (it == by_frame.end()) {
        throw Error("make_training_set: sequence '" + seq.id +
                    "' lacks a feature row for frame " + std::to_string(s.tau));
      }
      rows.ns.push_back(it->second->normal_sum);
      rows.az.push_back(it->second->azimuth_slices);
      rows.z.push_back(s.xi_err.rho.z());
      rows.pitch.push_back(s.xi_err.phi.y());
      rows.roll.push_back(s.xi_err.phi.x());
    }
  }

  const auto pack = [](const Rows& rows) {
    DofSplit split;
    const int n = static_cast<int>(rows.ns.size());
    split.z.X.resize(n, 3);
    split.pitch.X.resize(n, 3);
    split.roll.X.resize(n, kAzimuthSliceCount);
    split.z.y.resize(n);
    split.pitch.y.resize(n);
    split.roll.y.resize(n);
    for (int i = 0; i < n; ++i) {
      split.z.X.row(i) = rows.ns[i].transpose();
      split.pitch.X.row(i) = rows.ns[i].transpose();
      split.roll.X.row(i) = rows.az[i].transpose();
      split.z.y[i] = rows.z[i];
      split.pitch.y[i] = rows.pitch[i];
      split.roll.y[i] = rows.roll[i];
    }
    return split;
  };

  return TrainingSplit{pack(train), pack(validation)};
}

}  // namespace lbc
