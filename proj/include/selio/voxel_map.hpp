#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "selio/geometry.hpp"

namespace selio {

struct VoxelKey {
  int64_t x = 0, y = 0, z = 0;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  size_t operator()(const VoxelKey& k) const {
    uint64_t h = static_cast<uint64_t>(k.x) * 0x9E3779B185EBCA87ull;
    h ^= static_cast<uint64_t>(k.y) * 0xC2B2AE3D27D4EB4Full;
    h ^= static_cast<uint64_t>(k.z) * 0x165667B19E3779F9ull;
    h ^= h >> 29;
    return static_cast<size_t>(h);
  }
};

struct MapConfig {
  double voxel_size = 1.0;
  int max_points_per_voxel = 20;
  double prune_distance = 500.0;    // voxel-center distance threshold [m]
  int search_radius = 1;            // neighbor window half-width in voxels
  double min_point_spacing = 0.1;   // reject points this close to a stored
                                    // point in the same voxel [m]
};

struct InsertionReport {
  int added = 0;
  int rejected = 0;  // dropped: voxel full or too close to a stored point
};

struct PlaneFit {
  Vec3 normal = Vec3::UnitZ();  // unit length
  double d = 0.0;               // plane: normal . x + d == 0
  Vec3 centroid = Vec3::Zero();
  double planarity = 0.0;  // (sqrt(l2) - sqrt(l1)) / sqrt(l3), in [0, 1]
};

/// Fits a plane to >= 3 points via the smallest eigenvector of the point
/// covariance.  Returns nullopt when the two smallest eigenvalues coincide
/// within 1e-12 (line- or point-degenerate neighborhoods).  The normal points
/// away from `viewpoint` when given (normal . (viewpoint - centroid) <= 0),
/// otherwise its first nonzero component is made positive.
std::optional<PlaneFit> fit_plane(std::span<const Vec3> points,
                                  const Vec3* viewpoint = nullptr);

/// Hash-grid world map.  Points live in the voxel that contains them, each
/// voxel holds at most max_points_per_voxel points in insertion order.
class VoxelMap {
 public:
  explicit VoxelMap(const MapConfig& config = {}) : cfg_(config) {}

  const MapConfig& config() const { return cfg_; }

  VoxelKey key_of(const Vec3& p) const;
  Vec3 voxel_center(const VoxelKey& k) const;

  InsertionReport insert(std::span<const Vec3> points);

  /// Up to k nearest stored points inside the (2r+1)^3 voxel window around
  /// the query, sorted by ascending distance (ties keep scan order).
  void neighbors(const Vec3& query, int k, std::vector<Vec3>& out) const;
  std::vector<Vec3> neighbors(const Vec3& query, int k) const;

  /// Removes voxels whose center is farther than prune_distance from
  /// `position`.  Returns the number of voxels dropped.
  int prune(const Vec3& position);

  size_t voxel_count() const { return grid_.size(); }
  size_t point_count() const { return total_points_; }

  /// Deterministic point dump (voxel keys in lexicographic order).
  std::vector<Vec3> all_points_sorted() const;

 private:
  MapConfig cfg_;
  std::unordered_map<VoxelKey, std::vector<Vec3>, VoxelKeyHash> grid_;
  size_t total_points_ = 0;
};

}  // namespace selio
