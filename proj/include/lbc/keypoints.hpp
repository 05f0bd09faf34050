#ifndef LBC_KEYPOINTS_HPP
#define LBC_KEYPOINTS_HPP

#include <vector>

#include "lbc/pointcloud.hpp"

namespace lbc {

enum class KeypointRule { kIntensity, kPlanar };

// Indices into the parent PointFrame, sorted ascending. A point passing the
// planarity rule is tagged kPlanar even if it also passes the intensity rule.
struct KeypointSet {
  std::vector<int> indices;
  std::vector<KeypointRule> rules;  // parallel to indices

  int size() const { return static_cast<int>(indices.size()); }
};

// Two selection rules, each filling ~target_fraction/2 of the frame:
//   1. normalized intensity I*r^2 among the largest,
//   2. planarity ratio (l1+l2+l3)/l1 among the largest.
// Thresholds are per-frame rank quantiles, so the selected fraction tracks
// target_fraction regardless of the sensor's intensity calibration. Points
// with z below ground_height and line-degenerate neighborhoods
// (l2/l3 < 0.01) are excluded from rule 2. Ties break toward smaller index.
// Requires surface stats; throws EmptySelectionError below 10 points.
KeypointSet select_keypoints(const PointFrame& frame, double target_fraction,
                             double ground_height);

}  // namespace lbc

#endif  // LBC_KEYPOINTS_HPP
