#ifndef LBC_FEATURES_HPP
#define LBC_FEATURES_HPP

#include <Eigen/Core>
#include <filesystem>
#include <vector>

#include "lbc/keypoints.hpp"
#include "lbc/pointcloud.hpp"

namespace lbc {

constexpr int kAzimuthSliceCount = 16;
using AzimuthSlices = Eigen::Matrix<double, kAzimuthSliceCount, 1>;

// Per-frame geometric inputs for the error models. normal_sum feeds the z
// and pitch models, azimuth_slices feeds the roll model.
struct FeatureVector {
  Eigen::Vector3d normal_sum = Eigen::Vector3d::Zero();
  AzimuthSlices azimuth_slices = AzimuthSlices::Zero();
  int frame_index = 0;
};

// Component-wise sums of |n_x|, |n_y|, |n_z| over planar-tagged keypoints,
// divided by the total keypoint count M. Non-planar keypoints are skipped;
// their normal estimates are noisy.
Eigen::Vector3d normal_sum_feature(const PointFrame& frame, const KeypointSet& keys);

// 16 azimuth bins (slice 0 starts at azimuth -pi, fixed sensor-frame
// orientation); counts planar keypoints with |n_z| >= z_threshold per bin,
// divided by the total keypoint count M.
AzimuthSlices azimuth_slice_feature(const PointFrame& frame, const KeypointSet& keys,
                                    double z_threshold = 0.9);

FeatureVector compute_features(const PointFrame& frame, const KeypointSet& keys,
                               double z_threshold = 0.9);

// CSV with header: frame_index,ns_x,ns_y,ns_z,az_0,...,az_15
void write_feature_csv(const std::filesystem::path& path,
                       const std::vector<FeatureVector>& features);
std::vector<FeatureVector> read_feature_csv(const std::filesystem::path& path);

}  // namespace lbc

#endif  // LBC_FEATURES_HPP
