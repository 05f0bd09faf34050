#include "lbc/keypoints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lbc {

namespace {

constexpr double kLineDegenerateRatio = 0.01;  // l2/l3 below this is a line, not a plane

struct Scored {
  double score;
  int index;
};

// Top-m scores, ties toward smaller index; returns selected indices.
std::vector<int> top_m(std::vector<Scored>& candidates, size_t m) {
  m = std::min(m, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + m, candidates.end(),
                    [](const Scored& a, const Scored& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.index < b.index;
                    });
  std::vector<int> out(m);
  for (size_t i = 0; i < m; ++i) out[i] = candidates[i].index;
  return out;
}

}  // namespace

KeypointSet select_keypoints(const PointFrame& frame, double target_fraction,
                             double ground_height) {
  if (!frame.has_stats()) {
    throw Error("select_keypoints: frame has no surface stats");
  }
  if (!(target_fraction > 0.0 && target_fraction < 1.0)) {
    throw Error("select_keypoints: target_fraction must be in (0, 1)");
  }
  const int n = frame.size();
  if (n < 10) {
    throw EmptySelectionError("select_keypoints: only " + std::to_string(n) +
                              " candidate points");
  }

  const size_t per_rule =
      std::max<size_t>(1, static_cast<size_t>(std::llround(n * target_fraction / 2.0)));

  std::vector<Scored> by_intensity;
  by_intensity.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double r2 = frame.points[i].squaredNorm();
    by_intensity.push_back({frame.intensity[i] * r2, i});
  }

  std::vector<Scored> by_planarity;
  by_planarity.reserve(n);
  for (int i = 0; i < n; ++i) {
    const auto& s = frame.stats[i];
    if (s.degenerate) continue;
    if (frame.points[i].z() < ground_height) continue;
    if (s.eigenvalues[1] < kLineDegenerateRatio * s.eigenvalues[2]) continue;
    const double l1 = s.eigenvalues[0];
    const double ratio = l1 > 0.0 ? s.eigenvalues.sum() / l1
                                  : std::numeric_limits<double>::infinity();
    by_planarity.push_back({ratio, i});
  }

  const std::vector<int> rule1 = top_m(by_intensity, per_rule);
  const std::vector<int> rule2 = top_m(by_planarity, per_rule);

  std::vector<char> selected(n, 0), planar(n, 0);
  for (int i : rule1) selected[i] = 1;
  for (int i : rule2) {
    selected[i] = 1;
    planar[i] = 1;
  }

  KeypointSet keys;
  keys.indices.reserve(rule1.size() + rule2.size());
  for (int i = 0; i < n; ++i) {
    if (!selected[i]) continue;
    keys.indices.push_back(i);
    keys.rules.push_back(planar[i] ? KeypointRule::kPlanar : KeypointRule::kIntensity);
  }
  return keys;
}

}  // namespace lbc
