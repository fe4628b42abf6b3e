#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "selio/voxel_map.hpp"
#include "test_support.hpp"

using namespace selio;
using selio::testing::make_rng;
using selio::testing::random_unit;
using selio::testing::random_vec;

namespace {

// Brute-force reference for the k-nearest query restricted to the same voxel
// window the map searches.
std::vector<Vec3> brute_force_neighbors(const VoxelMap& map,
                                        std::span<const Vec3> stored,
                                        const Vec3& query, int k) {
  const MapConfig& cfg = map.config();
  const VoxelKey center = map.key_of(query);
  std::vector<Vec3> in_window;
  for (const Vec3& p : stored) {
    const VoxelKey key = map.key_of(p);
    if (std::abs(key.x - center.x) <= cfg.search_radius &&
        std::abs(key.y - center.y) <= cfg.search_radius &&
        std::abs(key.z - center.z) <= cfg.search_radius) {
      in_window.push_back(p);
    }
  }
  std::stable_sort(in_window.begin(), in_window.end(),
                   [&](const Vec3& a, const Vec3& b) {
                     return (a - query).squaredNorm() <
                            (b - query).squaredNorm();
                   });
  if (static_cast<int>(in_window.size()) > k) in_window.resize(k);
  return in_window;
}

}  // namespace

TEST_CASE("voxel keys and centers are consistent") {
  VoxelMap map;
  const Vec3 p(1.4, -0.3, 2.9);
  const VoxelKey key = map.key_of(p);
  const Vec3 center = map.voxel_center(key);
  CHECK((center - p).lpNorm<Eigen::Infinity>() <= 0.5 + 1e-12);
  CHECK(key == map.key_of(center));
  // Negative coordinates land in the floor cell, not the truncated one.
  const VoxelKey neg = map.key_of({-0.2, -0.2, -0.2});
  CHECK(neg.x == -1);
  CHECK(neg.y == -1);
  CHECK(neg.z == -1);
}

TEST_CASE("insert stores one point and reports it") {
  VoxelMap map;
  const Vec3 p(0.5, 0.5, 0.5);
  const InsertionReport report = map.insert(std::span<const Vec3>(&p, 1));
  CHECK(report.added == 1);
  CHECK(report.rejected == 0);
  CHECK(map.point_count() == 1);
  CHECK(map.voxel_count() == 1);
}

TEST_CASE("a full voxel rejects the overflow points") {
  MapConfig cfg;
  cfg.min_point_spacing = 0.0;
  VoxelMap map(cfg);
  std::vector<Vec3> pts;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      pts.push_back({0.1 + 0.2 * i, 0.1 + 0.2 * j, 0.5});  // one voxel, spread
    }
  }
  const InsertionReport report = map.insert(pts);
  CHECK(report.added == 20);
  CHECK(report.rejected == 5);
  CHECK(map.point_count() == 20);
  CHECK(map.voxel_count() == 1);
}

TEST_CASE("spacing rule rejects near-duplicates unless disabled") {
  MapConfig cfg;
  cfg.min_point_spacing = 0.0;
  VoxelMap loose(cfg);
  const Vec3 p(0.25, 0.25, 0.25);
  std::vector<Vec3> twice = {p, p};
  const InsertionReport free_report = loose.insert(twice);
  CHECK(free_report.added == 2);
  CHECK(free_report.rejected == 0);

  VoxelMap strict;  // default spacing 0.1
  const InsertionReport strict_report = strict.insert(twice);
  CHECK(strict_report.added == 1);
  CHECK(strict_report.rejected == 1);
  const Vec3 close = p + Vec3(0.05, 0.0, 0.0);
  CHECK(strict.insert(std::span<const Vec3>(&close, 1)).rejected == 1);
  const Vec3 far = p + Vec3(0.5, 0.0, 0.0);
  CHECK(strict.insert(std::span<const Vec3>(&far, 1)).added == 1);
}

TEST_CASE("neighbors match brute force inside the search window") {
  MapConfig cfg;
  cfg.max_points_per_voxel = 50;
  cfg.min_point_spacing = 0.0;
  VoxelMap map(cfg);
  auto rng = make_rng(31);
  std::vector<Vec3> stored;
  for (int i = 0; i < 50; ++i) stored.push_back(random_vec(rng, 2.0));
  map.insert(stored);
  for (int q = 0; q < 50; ++q) {
    const Vec3 query = random_vec(rng, 2.5);
    const auto got = map.neighbors(query, 20);
    const auto expected = brute_force_neighbors(map, stored, query, 20);
    REQUIRE(got.size() == expected.size());
    for (size_t i = 0; i < got.size(); ++i) {
      CHECK((got[i] - expected[i]).norm() == 0.0);
    }
    // Sorted by ascending distance.
    for (size_t i = 1; i < got.size(); ++i) {
      CHECK((got[i - 1] - query).norm() <= (got[i] - query).norm() + 1e-15);
    }
  }
}

TEST_CASE("neighbor query in an empty region returns nothing") {
  VoxelMap map;
  const Vec3 p(0.0, 0.0, 0.0);
  map.insert(std::span<const Vec3>(&p, 1));
  CHECK(map.neighbors({100.0, 100.0, 100.0}, 5).empty());
  std::vector<Vec3> out = {Vec3::Ones()};
  map.neighbors({100.0, 100.0, 100.0}, 5, out);
  CHECK(out.empty());
}

TEST_CASE("plane fit recovers an axis-aligned plane exactly") {
  std::vector<Vec3> pts;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      pts.push_back({0.3 * i, 0.3 * j, 5.0});
    }
  }
  const auto fit = fit_plane(pts);
  REQUIRE(fit.has_value());
  CHECK(std::abs(std::abs(fit->normal.z()) - 1.0) < 1e-12);
  CHECK(std::abs(fit->normal.dot(pts[0]) + fit->d) < 1e-12);
  CHECK(fit->planarity > 0.9);
  // With a viewpoint below the plane the normal points down toward it is
  // disallowed: it must point away from the viewpoint side.
  const Vec3 viewpoint(0.5, 0.5, 0.0);
  const auto oriented = fit_plane(pts, &viewpoint);
  REQUIRE(oriented.has_value());
  CHECK(oriented->normal.dot(viewpoint - oriented->centroid) <= 0.0);
}

TEST_CASE("plane fit refuses collinear points") {
  std::vector<Vec3> pts;
  for (int i = 0; i < 10; ++i) {
    pts.push_back({0.1 * i, 0.2 * i, -0.05 * i});
  }
  CHECK(!fit_plane(pts).has_value());
}

TEST_CASE("plane fit tolerates small noise") {
  auto rng = make_rng(32);
  std::normal_distribution<double> noise(0.0, 0.01);
  const Vec3 normal = random_unit(rng);
  const Vec3 u = normal.unitOrthogonal();
  const Vec3 v = normal.cross(u);
  const Vec3 origin(1.0, -2.0, 0.5);
  std::vector<Vec3> pts;
  for (int i = 0; i < 200; ++i) {
    const Vec3 p = origin + random_vec(rng, 1.0).x() * u +
                   random_vec(rng, 1.0).y() * v + noise(rng) * normal;
    pts.push_back(p);
  }
  const auto fit = fit_plane(pts);
  REQUIRE(fit.has_value());
  const double cosine = std::abs(fit->normal.dot(normal));
  CHECK(std::acos(std::min(1.0, cosine)) < 1.0 * M_PI / 180.0);

  // The reported smallest-eigenvalue direction should explain the residual
  // spread: RMS point-plane distance within 10% of sqrt(lambda_1).
  Mat3 cov = Mat3::Zero();
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  for (const Vec3& p : pts) cov += (p - mean) * (p - mean).transpose();
  cov /= static_cast<double>(pts.size());
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  double rms = 0.0;
  for (const Vec3& p : pts) {
    const double dist = fit->normal.dot(p) + fit->d;
    rms += dist * dist;
  }
  rms = std::sqrt(rms / static_cast<double>(pts.size()));
  CHECK(rms == doctest::Approx(std::sqrt(eig.eigenvalues()[0])).epsilon(0.1));
}

TEST_CASE("prune removes only voxels beyond the distance threshold") {
  MapConfig cfg;
  cfg.prune_distance = 10.0;
  VoxelMap map(cfg);
  std::vector<Vec3> pts = {{0.5, 0.5, 0.5}, {5.5, 0.5, 0.5}, {50.5, 0.5, 0.5}};
  map.insert(pts);
  CHECK(map.voxel_count() == 3);
  const int dropped = map.prune(Vec3::Zero());
  CHECK(dropped == 1);
  CHECK(map.voxel_count() == 2);
  CHECK(map.point_count() == 2);
  // All remaining voxel centers honor the bound.
  for (const Vec3& p : map.all_points_sorted()) {
    CHECK((map.voxel_center(map.key_of(p)) - Vec3::Zero()).norm() <=
          cfg.prune_distance + 1e-12);
  }
  CHECK(map.prune(Vec3::Zero()) == 0);
}

TEST_CASE("random operations never exceed the voxel capacity") {
  MapConfig cfg;
  cfg.voxel_size = 0.5;
  cfg.min_point_spacing = 0.0;
  cfg.prune_distance = 6.0;
  VoxelMap map(cfg);
  auto rng = make_rng(33);
  std::uniform_int_distribution<int> batch(1, 40);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  size_t expected_points = 0;
  for (int round = 0; round < 300; ++round) {
    std::vector<Vec3> pts;
    const int n = batch(rng);
    for (int i = 0; i < n; ++i) pts.push_back(random_vec(rng, 4.0));
    const InsertionReport report = map.insert(pts);
    CHECK(report.added + report.rejected == n);
    expected_points += static_cast<size_t>(report.added);
    if (u01(rng) < 0.1) {
      map.prune(random_vec(rng, 6.0));
      expected_points = map.point_count();
    }
    CHECK(map.point_count() == expected_points);
  }
  // Capacity invariant, checked per voxel via the sorted dump.
  const std::vector<Vec3> all = map.all_points_sorted();
  std::unordered_map<VoxelKey, int, VoxelKeyHash> counts;
  for (const Vec3& p : all) counts[map.key_of(p)]++;
  CHECK(counts.size() == map.voxel_count());
  for (const auto& [key, count] : counts) {
    CHECK(count <= cfg.max_points_per_voxel);
  }
}
