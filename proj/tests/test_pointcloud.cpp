#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lbc/pointcloud.hpp"
#include "lbc/rng.hpp"
#include "oracles.hpp"

using namespace lbc;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / name;
}

void write_bytes(const fs::path& p, const std::vector<float>& floats) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(floats.data()),
            static_cast<std::streamsize>(floats.size() * sizeof(float)));
}

}  // namespace

TEST_CASE("read_kitti_bin parses a single record") {
  const auto p = temp_file("lbc_one_record.bin");
  write_bytes(p, {1.0f, 2.0f, 3.0f, 0.5f});
  const PointFrame frame = read_kitti_bin(p);
  CHECK(frame.size() == 1);
  CHECK((frame.points[0] - Eigen::Vector3d(1, 2, 3)).norm() == 0.0);
  CHECK(frame.intensity[0] == 0.5);
  fs::remove(p);
}

TEST_CASE("read_kitti_bin rejects bad files") {
  const auto empty = temp_file("lbc_empty.bin");
  { std::ofstream out(empty, std::ios::binary | std::ios::trunc); }
  CHECK_THROWS_AS(read_kitti_bin(empty), TruncatedFileError);
  fs::remove(empty);

  const auto ragged = temp_file("lbc_ragged.bin");
  {
    std::ofstream out(ragged, std::ios::binary | std::ios::trunc);
    const char bytes[17] = {0};
    out.write(bytes, 17);
  }
  CHECK_THROWS_AS(read_kitti_bin(ragged), TruncatedFileError);
  fs::remove(ragged);

  const auto nan_file = temp_file("lbc_nan.bin");
  write_bytes(nan_file, {1.0f, std::nanf(""), 3.0f, 0.5f});
  CHECK_THROWS_AS(read_kitti_bin(nan_file), NonFiniteDataError);
  fs::remove(nan_file);

  CHECK_THROWS_AS(read_kitti_bin(temp_file("lbc_does_not_exist.bin")),
                  TruncatedFileError);
}

TEST_CASE("read_kitti_bin preserves record order") {
  const auto p = temp_file("lbc_two_records.bin");
  write_bytes(p, {1.0f, 0.0f, 0.0f, 0.1f, 0.0f, 2.0f, 0.0f, 0.9f});
  const PointFrame frame = read_kitti_bin(p);
  REQUIRE(frame.size() == 2);
  CHECK(frame.points[0].x() == 1.0);
  CHECK(frame.points[1].y() == 2.0);
  CHECK(frame.intensity[1] == doctest::Approx(0.9).epsilon(1e-6));
  fs::remove(p);
}

TEST_CASE("kitti bin round trip") {
  SeededRng rng(5);
  PointFrame frame;
  for (int i = 0; i < 100; ++i) {
    frame.points.emplace_back(rng.uniform(-50, 50), rng.uniform(-50, 50),
                              rng.uniform(-3, 3));
    frame.intensity.push_back(rng.uniform01());
  }
  const auto p = temp_file("lbc_roundtrip.bin");
  write_kitti_bin(p, frame);
  const PointFrame back = read_kitti_bin(p);
  REQUIRE(back.size() == frame.size());
  for (int i = 0; i < frame.size(); ++i) {
    // float32 narrowing is the only loss
    CHECK((back.points[i] - frame.points[i]).cwiseAbs().maxCoeff() < 1e-5);
  }
  fs::remove(p);
}

TEST_CASE("knn self query and collinear case") {
  std::vector<Eigen::Vector3d> pts = {{0, 0, 0}, {1, 0, 0}, {3, 0, 0}};
  // avoid origin point for index purposes; shift all by +10 in x
  for (auto& p : pts) p.x() += 10.0;
  const KnnIndex index(pts);

  for (int i = 0; i < 3; ++i) {
    const auto nn = index.knn(pts[i], 1);
    REQUIRE(nn.size() == 1);
    CHECK(nn[0].index == i);
    CHECK(nn[0].dist2 == 0.0);
  }

  const auto two = index.knn(pts[1], 2);
  REQUIRE(two.size() == 2);
  CHECK(two[0].index == 1);
  CHECK(two[1].index == 0);
}

TEST_CASE("knn matches brute force on random clouds") {
  SeededRng rng(99);
  for (const int n : {50, 500, 2000}) {
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) {
      pts.emplace_back(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10));
    }
    const KnnIndex index(pts);
    for (int trial = 0; trial < 25; ++trial) {
      const Eigen::Vector3d q(rng.uniform(-12, 12), rng.uniform(-12, 12),
                              rng.uniform(-12, 12));
      const int k = 1 + static_cast<int>(rng.uniform_index(20));
      const auto got = index.knn(q, k);
      const auto want = lbc::testing::brute_force_knn(pts, q, k);
      REQUIRE(got.size() == want.size());
      for (size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].index == want[i].index);
        CHECK(got[i].dist2 == want[i].dist2);
      }
    }
  }
}

TEST_CASE("knn breaks distance ties by smaller index") {
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < 40; ++i) pts.emplace_back(1.0, 2.0, 3.0);  // all duplicates
  const KnnIndex index(pts);
  const auto nn = index.knn(Eigen::Vector3d(1.0, 2.0, 3.0), 5);
  REQUIRE(nn.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(nn[i].index == i);
}

TEST_CASE("nearest_within honors the distance cap") {
  std::vector<Eigen::Vector3d> pts = {{5, 0, 0}, {9, 0, 0}};
  const KnnIndex index(pts);
  CHECK(index.nearest_within(Eigen::Vector3d(5.4, 0, 0), 0.5) == 0);
  CHECK(index.nearest_within(Eigen::Vector3d(7, 0, 0), 0.5) == -1);
}

TEST_CASE("surface stats on an exact plane") {
  PointFrame frame;
  for (int i = -10; i <= 10; ++i) {
    for (int j = -10; j <= 10; ++j) {
      frame.points.emplace_back(0.2 * i, 0.2 * j, -2.0);
      frame.intensity.push_back(1.0);
    }
  }
  compute_surface_stats(frame, 20);
  REQUIRE(frame.has_stats());
  for (int i = 0; i < frame.size(); ++i) {
    const auto& s = frame.stats[i];
    CHECK_FALSE(s.degenerate);
    CHECK(s.eigenvalues[0] < 1e-9);
    CHECK(std::abs(s.normal.z()) == doctest::Approx(1.0).epsilon(1e-9));
    // oriented toward the sensor at the origin
    CHECK(s.normal.dot(-frame.points[i]) >= 0.0);
    CHECK(s.normal.z() > 0.0);
  }
}

TEST_CASE("surface stats on a line are rank-1") {
  PointFrame frame;
  for (int i = 0; i < 60; ++i) {
    frame.points.emplace_back(0.1 * i + 1.0, 5.0, 1.0);
    frame.intensity.push_back(1.0);
  }
  compute_surface_stats(frame, 10);
  for (const auto& s : frame.stats) {
    CHECK(s.eigenvalues[0] < 1e-12);
    CHECK(s.eigenvalues[1] < 1e-12);
    CHECK(s.eigenvalues[2] > 1e-4);
  }
}

TEST_CASE("surface stats match a dense eigensolver oracle on a quadric") {
  SeededRng rng(123);
  PointFrame frame;
  for (int i = 0; i < 400; ++i) {
    const double x = rng.uniform(-2, 2), y = rng.uniform(-2, 2);
    frame.points.emplace_back(x + 3.0, y + 3.0, 3.0 + 0.15 * x * x - 0.1 * x * y + 0.2 * y * y);
    frame.intensity.push_back(1.0);
  }
  const int k = 20;
  compute_surface_stats(frame, k);

  for (int i = 0; i < frame.size(); i += 17) {
    const auto neighbors = lbc::testing::brute_force_knn(frame.points, frame.points[i], k);
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

    CHECK((frame.stats[i].eigenvalues - es.eigenvalues().cwiseMax(0.0)).cwiseAbs().maxCoeff() <
          1e-8);
    // eigenvalue sum equals covariance trace
    CHECK(frame.stats[i].eigenvalues.sum() == doctest::Approx(cov.trace()).epsilon(1e-10));
  }
}

TEST_CASE("coincident neighborhoods are flagged degenerate") {
  PointFrame frame;
  for (int i = 0; i < 30; ++i) {
    frame.points.emplace_back(4.0, 4.0, 4.0);
    frame.intensity.push_back(1.0);
  }
  frame.points.emplace_back(10.0, 10.0, 10.0);
  frame.intensity.push_back(1.0);
  compute_surface_stats(frame, 10);
  CHECK(frame.stats[0].degenerate);
  CHECK(frame.stats[0].normal.norm() == 0.0);
}

TEST_CASE("compute_surface_stats requires more points than k") {
  PointFrame frame;
  for (int i = 0; i < 5; ++i) {
    frame.points.emplace_back(i + 1.0, 0.0, 0.0);
    frame.intensity.push_back(1.0);
  }
  CHECK_THROWS_AS(compute_surface_stats(frame, 5), Error);
}
