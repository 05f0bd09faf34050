#include "lbc/features.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace lbc {

Eigen::Vector3d normal_sum_feature(const PointFrame& frame, const KeypointSet& keys) {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  if (keys.indices.empty()) return sum;
  for (int i = 0; i < keys.size(); ++i) {
    if (keys.rules[i] != KeypointRule::kPlanar) continue;
    sum += frame.stats[keys.indices[i]].normal.cwiseAbs();
  }
  return sum / static_cast<double>(keys.size());
}

AzimuthSlices azimuth_slice_feature(const PointFrame& frame, const KeypointSet& keys,
                                    double z_threshold) {
  AzimuthSlices slices = AzimuthSlices::Zero();
  if (keys.indices.empty()) return slices;
  for (int i = 0; i < keys.size(); ++i) {
    if (keys.rules[i] != KeypointRule::kPlanar) continue;
    const int idx = keys.indices[i];
    if (std::abs(frame.stats[idx].normal.z()) < z_threshold) continue;
    const Eigen::Vector3d& p = frame.points[idx];
    const double azimuth = std::atan2(p.y(), p.x());  // [-pi, pi]
    int slice = static_cast<int>(std::floor(kAzimuthSliceCount * (azimuth + M_PI) /
                                            (2.0 * M_PI)));
    slice = std::clamp(slice, 0, kAzimuthSliceCount - 1);
    slices[slice] += 1.0;
  }
  return slices / static_cast<double>(keys.size());
}

FeatureVector compute_features(const PointFrame& frame, const KeypointSet& keys,
                               double z_threshold) {
  FeatureVector f;
  f.normal_sum = normal_sum_feature(frame, keys);
  f.azimuth_slices = azimuth_slice_feature(frame, keys, z_threshold);
  f.frame_index = frame.frame_index;
  return f;
}

namespace {

std::string feature_csv_header() {
  std::string h = "frame_index,ns_x,ns_y,ns_z";
  for (int i = 0; i < kAzimuthSliceCount; ++i) h += ",az_" + std::to_string(i);
  return h;
}

}  // namespace

void write_feature_csv(const std::filesystem::path& path,
                       const std::vector<FeatureVector>& features) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << feature_csv_header() << '\n' << std::setprecision(17);
  for (const FeatureVector& f : features) {
    out << f.frame_index << ',' << f.normal_sum.x() << ',' << f.normal_sum.y() << ','
        << f.normal_sum.z();
    for (int i = 0; i < kAzimuthSliceCount; ++i) out << ',' << f.azimuth_slices[i];
    out << '\n';
  }
}

std::vector<FeatureVector> read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != feature_csv_header()) {
    throw Error(path.string() + ": bad feature CSV header");
  }
  std::vector<FeatureVector> features;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    FeatureVector f;
    char comma;
    double values[3 + kAzimuthSliceCount];
    if (!(ss >> f.frame_index)) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": bad row");
    }
    for (double& v : values) {
      if (!(ss >> comma >> v) || comma != ',') {
        throw Error(path.string() + ":" + std::to_string(lineno) + ": bad row");
      }
    }
    f.normal_sum << values[0], values[1], values[2];
    for (int i = 0; i < kAzimuthSliceCount; ++i) f.azimuth_slices[i] = values[3 + i];
    features.push_back(f);
  }
  return features;
}

}  // namespace lbc
