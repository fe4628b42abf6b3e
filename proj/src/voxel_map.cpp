#include "selio/voxel_map.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace selio {

std::optional<PlaneFit> fit_plane(std::span<const Vec3> points,
                                  const Vec3* viewpoint) {
  if (points.size() < 3) return std::nullopt;

  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());

  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : points) {
    const Vec3 d = p - centroid;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(points.size());

  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const Vec3 evals = eig.eigenvalues();  // ascending
  if (evals(1) - evals(0) < 1e-12) return std::nullopt;

  PlaneFit fit;
  fit.normal = eig.eigenvectors().col(0).normalized();
  fit.centroid = centroid;

  const double toward =
      viewpoint != nullptr ? fit.normal.dot(*viewpoint - centroid) : 0.0;
  bool flip;
  if (toward != 0.0) {
    flip = toward > 0.0;  // normal . (viewpoint - centroid) <= 0
  } else if (fit.normal.x() != 0.0) {  // lexicographic fallback
    flip = fit.normal.x() < 0.0;
  } else if (fit.normal.y() != 0.0) {
    flip = fit.normal.y() < 0.0;
  } else {
    flip = fit.normal.z() < 0.0;
  }
  if (flip) fit.normal = -fit.normal;
  fit.d = -fit.normal.dot(centroid);

  const double s1 = std::sqrt(std::max(evals(0), 0.0));
  const double s2 = std::sqrt(std::max(evals(1), 0.0));
  const double s3 = std::sqrt(std::max(evals(2), 0.0));
  fit.planarity = s3 > 0.0 ? (s2 - s1) / s3 : 0.0;
  return fit;
}

VoxelKey VoxelMap::key_of(const Vec3& p) const {
  return {static_cast<int64_t>(std::floor(p.x() / cfg_.voxel_size)),
          static_cast<int64_t>(std::floor(p.y() / cfg_.voxel_size)),
          static_cast<int64_t>(std::floor(p.z() / cfg_.voxel_size))};
}

Vec3 VoxelMap::voxel_center(const VoxelKey& k) const {
  return {(static_cast<double>(k.x) + 0.5) * cfg_.voxel_size,
          (static_cast<double>(k.y) + 0.5) * cfg_.voxel_size,
          (static_cast<double>(k.z) + 0.5) * cfg_.voxel_size};
}

InsertionReport VoxelMap::insert(std::span<const Vec3> points) {
  InsertionReport report;
  const double spacing_sq = cfg_.min_point_spacing * cfg_.min_point_spacing;
  for (const Vec3& p : points) {
    auto& cell = grid_[key_of(p)];
    if (cell.empty()) cell.reserve(cfg_.max_points_per_voxel);
    if (static_cast<int>(cell.size()) >= cfg_.max_points_per_voxel) {
      ++report.rejected;
      continue;
    }
    bool crowded = false;
    for (const Vec3& q : cell) {
      if ((q - p).squaredNorm() < spacing_sq) {
        crowded = true;
        break;
      }
    }
    if (crowded) {
      ++report.rejected;
      continue;
    }
    cell.push_back(p);
    ++total_points_;
    ++report.added;
  }
  return report;
}

void VoxelMap::neighbors(const Vec3& query, int k, std::vector<Vec3>& out) const {
  out.clear();
  if (k <= 0) return;
  const VoxelKey c = key_of(query);
  const int r = cfg_.search_radius;

  thread_local std::vector<std::pair<double, Vec3>> candidates;
  candidates.clear();
  for (int dx = -r; dx <= r; ++dx) {
    for (int dy = -r; dy <= r; ++dy) {
      for (int dz = -r; dz <= r; ++dz) {
        const auto it = grid_.find({c.x + dx, c.y + dy, c.z + dz});
        if (it == grid_.end()) continue;
        for (const Vec3& p : it->second) {
          candidates.emplace_back((p - query).squaredNorm(), p);
        }
      }
    }
  }
  const size_t keep = std::min<size_t>(k, candidates.size());
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  out.reserve(keep);
  for (size_t i = 0; i < keep; ++i) out.push_back(candidates[i].second);
}

std::vector<Vec3> VoxelMap::neighbors(const Vec3& query, int k) const {
  std::vector<Vec3> out;
  neighbors(query, k, out);
  return out;
}

int VoxelMap::prune(const Vec3& position) {
  const double limit = cfg_.prune_distance * cfg_.prune_distance;
  int dropped = 0;
  for (auto it = grid_.begin(); it != grid_.end();) {
    if ((voxel_center(it->first) - position).squaredNorm() > limit) {
      total_points_ -= it->second.size();
      it = grid_.erase(it);
      ++dropped;
    } else {
      ++it;
    }
  }
  return dropped;
}

std::vector<Vec3> VoxelMap::all_points_sorted() const {
  std::vector<const std::pair<const VoxelKey, std::vector<Vec3>>*> cells;
  cells.reserve(grid_.size());
  for (const auto& kv : grid_) cells.push_back(&kv);
  std::sort(cells.begin(), cells.end(), [](const auto* a, const auto* b) {
    const VoxelKey &x = a->first, &y = b->first;
    if (x.x != y.x) return x.x < y.x;
    if (x.y != y.y) return x.y < y.y;
    return x.z < y.z;
  });
  std::vector<Vec3> out;
  out.reserve(total_points_);
  for (const auto* cell : cells) {
    out.insert(out.end(), cell->second.begin(), cell->second.end());
  }
  return out;
}

}  // namespace selio
