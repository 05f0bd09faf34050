#ifndef LBC_POINTCLOUD_HPP
#define LBC_POINTCLOUD_HPP

#include <Eigen/Core>
#include <filesystem>
#include <vector>

#include "lbc/errors.hpp"

namespace lbc {

// Per-point neighborhood statistics from the k-NN covariance.
struct SurfaceStats {
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();  // unit, oriented toward sensor
  Eigen::Vector3d eigenvalues = Eigen::Vector3d::Zero();  // ascending, clamped >= 0
  int neighbor_count = 0;
  // All neighbors coincident (lambda3 < 1e-12): normal undefined, point
  // excluded from planar tests.
  bool degenerate = false;
};

// One full lidar sweep in the sensor frame.
struct PointFrame {
  std::vector<Eigen::Vector3d> points;
  std::vector<double> intensity;
  int frame_index = 0;
  std::vector<SurfaceStats> stats;  // empty until compute_surface_stats

  int size() const { return static_cast<int>(points.size()); }
  bool has_stats() const { return !points.empty() && stats.size() == points.size(); }
};

// Parses little-endian float32 (x, y, z, reflectance) records. Zero-range
// records (exactly at the sensor origin) are dropped. Throws
// TruncatedFileError if the length is not a multiple of 16 bytes or no
// usable record remains, NonFiniteDataError on NaN/Inf values.
PointFrame read_kitti_bin(const std::filesystem::path& path);

// Inverse of read_kitti_bin; intensity is narrowed to float32.
void write_kitti_bin(const std::filesystem::path& path, const PointFrame& frame);

// Exact k-nearest-neighbor index (k-d tree). Ties at equal distance are
// broken by smaller point index, so results match a brute-force scan
// exactly. Queries are read-only and safe to run concurrently.
class KnnIndex {
 public:
  struct Neighbor {
    int index;
    double dist2;
  };

  explicit KnnIndex(std::vector<Eigen::Vector3d> points);

  // k nearest neighbors of q, sorted ascending by (distance, index).
  std::vector<Neighbor> knn(const Eigen::Vector3d& q, int k) const;

  // Index of the nearest point within max_dist, or -1.
  int nearest_within(const Eigen::Vector3d& q, double max_dist) const;

  int size() const { return static_cast<int>(points_.size()); }
  const std::vector<Eigen::Vector3d>& points() const { return points_; }

 private:
  struct Node {
    int axis = -1;       // -1 for leaf
    double split = 0.0;
    int left = -1, right = -1;
    int begin = 0, end = 0;  // range into order_ (leaves only)
  };

  int build(int begin, int end);
  void search(int node, const Eigen::Vector3d& q, int k,
              std::vector<Neighbor>& heap) const;

  std::vector<Eigen::Vector3d> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

// Fills frame.stats: covariance of each point's k nearest neighbors
// (including itself), eigenvalues ascending, normal = eigenvector of the
// smallest eigenvalue oriented so normal . (origin - point) >= 0.
// Requires frame.size() > k.
void compute_surface_stats(PointFrame& frame, int k);

}  // namespace lbc

#endif  // LBC_POINTCLOUD_HPP
