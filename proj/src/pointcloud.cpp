#include "lbc/pointcloud.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace lbc {

PointFrame read_kitti_bin(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) {
    throw TruncatedFileError("cannot open " + path.string());
  }
  const std::streamoff size = in.tellg();
  if (size == 0 || size % 16 != 0) {
    throw TruncatedFileError(path.string() + ": length " + std::to_string(size) +
                             " is not a positive multiple of 16 bytes");
  }
  in.seekg(0);
  const size_t n_records = static_cast<size_t>(size) / 16;
  std::vector<float> raw(n_records * 4);
  in.read(reinterpret_cast<char*>(raw.data()), size);
  if (!in) {
    throw TruncatedFileError(path.string() + ": short read");
  }

  PointFrame frame;
  frame.points.reserve(n_records);
  frame.intensity.reserve(n_records);
  for (size_t i = 0; i < n_records; ++i) {
    const float x = raw[4 * i], y = raw[4 * i + 1], z = raw[4 * i + 2];
    const float refl = raw[4 * i + 3];
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z) ||
        !std::isfinite(refl)) {
      throw NonFiniteDataError(path.string() + ": non-finite value in record " +
                               std::to_string(i));
    }
    if (x == 0.0f && y == 0.0f && z == 0.0f) continue;  // sensor origin
    frame.points.emplace_back(x, y, z);
    frame.intensity.push_back(refl);
  }
  if (frame.points.empty()) {
    throw TruncatedFileError(path.string() + ": no usable records");
  }
  return frame;
}

void write_kitti_bin(const std::filesystem::path& path, const PointFrame& frame) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  std::vector<float> raw;
  raw.reserve(frame.points.size() * 4);
  for (int i = 0; i < frame.size(); ++i) {
    raw.push_back(static_cast<float>(frame.points[i].x()));
    raw.push_back(static_cast<float>(frame.points[i].y()));
    raw.push_back(static_cast<float>(frame.points[i].z()));
    raw.push_back(static_cast<float>(frame.intensity[i]));
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
}

namespace {

constexpr int kLeafSize = 16;

// (dist2, index) ordering; the heap keeps the current worst on top.
inline bool neighbor_less(const KnnIndex::Neighbor& a, const KnnIndex::Neighbor& b) {
  if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
  return a.index < b.index;
}

}  // namespace

KnnIndex::KnnIndex(std::vector<Eigen::Vector3d> points) : points_(std::move(points)) {
  order_.resize(points_.size());
  for (size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    root_ = build(0, static_cast<int>(points_.size()));
  }
}

int KnnIndex::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  if (end - begin <= kLeafSize) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }

  Eigen::Vector3d lo = points_[order_[begin]], hi = lo;
  for (int i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);

  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     const double ca = points_[a][axis], cb = points_[b][axis];
                     if (ca != cb) return ca < cb;
                     return a < b;
                   });
  const double split = points_[order_[mid]][axis];

  nodes_[id].axis = axis;
  nodes_[id].split = split;
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KnnIndex::search(int node, const Eigen::Vector3d& q, int k,
                      std::vector<Neighbor>& heap) const {
  const Node& n = nodes_[node];
  if (n.axis < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int idx = order_[i];
      const Neighbor cand{idx, (points_[idx] - q).squaredNorm()};
      if (static_cast<int>(heap.size()) < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), neighbor_less);
      } else if (neighbor_less(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), neighbor_less);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), neighbor_less);
      }
    }
    return;
  }

  const double diff = q[n.axis] - n.split;
  const int near = diff < 0 ? n.left : n.right;
  const int far = diff < 0 ? n.right : n.left;
  search(near, q, k, heap);
  // <= keeps equal-distance candidates reachable so index tie-breaking
  // stays exact.
  if (static_cast<int>(heap.size()) < k || diff * diff <= heap.front().dist2) {
    search(far, q, k, heap);
  }
}

std::vector<KnnIndex::Neighbor> KnnIndex::knn(const Eigen::Vector3d& q, int k) const {
  std::vector<Neighbor> heap;
  if (root_ < 0 || k <= 0) return heap;
  heap.reserve(static_cast<size_t>(k) + 1);
  search(root_, q, k, heap);
  std::sort_heap(heap.begin(), heap.end(), neighbor_less);
  return heap;
}

int KnnIndex::nearest_within(const Eigen::Vector3d& q, double max_dist) const {
  const auto nn = knn(q, 1);
  if (nn.empty() || nn[0].dist2 > max_dist * max_dist) return -1;
  return nn[0].index;
}

void compute_surface_stats(PointFrame& frame, int k) {
  if (frame.size() <= k) {
    throw Error("compute_surface_stats: frame has " + std::to_string(frame.size()) +
                " points, need more than k=" + std::to_string(k));
  }
  const KnnIndex index(frame.points);
  frame.stats.assign(frame.points.size(), SurfaceStats{});

  for (int i = 0; i < frame.size(); ++i) {
    const auto neighbors = index.knn(frame.points[i], k);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& nb : neighbors) mean += frame.points[nb.index];
    mean /= static_cast<double>(neighbors.size());

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& nb : neighbors) {
      const Eigen::Vector3d d = frame.points[nb.index] - mean;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(neighbors.size());

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    SurfaceStats& s = frame.stats[i];
    s.eigenvalues = es.eigenvalues().cwiseMax(0.0);
    s.neighbor_count = static_cast<int>(neighbors.size());
    s.degenerate = s.eigenvalues[2] < 1e-12;
    if (!s.degenerate) {
      Eigen::Vector3d normal = es.eigenvectors().col(0);
      if (normal.dot(-frame.points[i]) < 0.0) normal = -normal;
      s.normal = normal;
    }
  }
}

}  // namespace lbc
