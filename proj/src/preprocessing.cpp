#include "selio/preprocessing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "selio/errors.hpp"
#include "selio/imu_preintegration.hpp"
#include "selio/voxel_map.hpp"

namespace selio {

std::vector<TimedPoint> quantitative_downsample(std::span<const TimedPoint> points,
                                                int step) {
  if (step < 1) throw std::invalid_argument("quantitative_downsample: step < 1");
  std::vector<TimedPoint> out;
  out.reserve((points.size() + step - 1) / step);
  for (size_t i = 0; i < points.size(); i += step) out.push_back(points[i]);
  return out;
}

std::vector<TimedPoint> voxel_downsample(std::span<const TimedPoint> points,
                                         double voxel_size) {
  if (!(voxel_size > 0.0)) {
    throw std::invalid_argument("voxel_downsample: voxel_size <= 0");
  }
  std::unordered_set<VoxelKey, VoxelKeyHash> seen;
  seen.reserve(points.size());
  std::vector<TimedPoint> out;
  for (const TimedPoint& p : points) {
    const VoxelKey k{static_cast<int64_t>(std::floor(p.position.x() / voxel_size)),
                     static_cast<int64_t>(std::floor(p.position.y() / voxel_size)),
                     static_cast<int64_t>(std::floor(p.position.z() / voxel_size))};
    if (seen.insert(k).second) out.push_back(p);
  }
  return out;
}

std::vector<TimedPoint> undistort_uniform(const Sweep& sweep,
                                          const NavState& x_b,
                                          const NavState& x_e,
                                          const Pose& extrinsic) {
  if (!(sweep.t_end > sweep.t_begin)) {
    throw std::invalid_argument("undistort_uniform: empty sweep interval");
  }
  const Pose lidar_b = x_b.pose() * extrinsic;
  const Pose lidar_e = x_e.pose() * extrinsic;
  const Pose world_to_end = x_e.pose().inverse();
  const double span = sweep.t_end - sweep.t_begin;

  std::vector<TimedPoint> out;
  out.reserve(sweep.points.size());
  for (const TimedPoint& p : sweep.points) {
    const double alpha = std::clamp((p.time - sweep.t_begin) / span, 0.0, 1.0);
    const Pose lidar_t = interpolate_pose(lidar_b, lidar_e, alpha);
    out.push_back({world_to_end * (lidar_t * p.position), p.time});
  }
  return out;
}

namespace {

ImuSample lerp_sample(const ImuSample& a, const ImuSample& b, double t) {
  const double w = (t - a.time) / (b.time - a.time);
  return {t, (1.0 - w) * a.accel + w * b.accel, (1.0 - w) * a.gyro + w * b.gyro};
}

}  // namespace

std::vector<TimedPoint> undistort_imu(const Sweep& sweep,
                                      std::span<const ImuSample> imu_window,
                                      const NavState& x_b, const Pose& extrinsic,
                                      const Vec3& gravity) {
  constexpr double kTol = 1e-9;
  if (imu_window.size() < 2) {
    throw DataError("undistort_imu: fewer than two IMU samples");
  }
  if (imu_window.front().time > sweep.t_begin + kTol ||
      imu_window.back().time < sweep.t_end - kTol) {
    throw DataError("undistort_imu: IMU window does not cover the sweep");
  }

  std::vector<double> gaps;
  gaps.reserve(imu_window.size() - 1);
  for (size_t i = 0; i + 1 < imu_window.size(); ++i) {
    gaps.push_back(imu_window[i + 1].time - imu_window[i].time);
  }
  std::vector<double> sorted = gaps;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double nominal = sorted[sorted.size() / 2];
  for (size_t i = 0; i < gaps.size(); ++i) {
    const double lo = imu_window[i].time, hi = imu_window[i + 1].time;
    if (hi <= sweep.t_begin || lo >= sweep.t_end) continue;
    if (gaps[i] > 2.0 * nominal + kTol) {
      throw DataError("undistort_imu: IMU gap inside sweep exceeds twice the "
                      "nominal sample period");
    }
  }

  // States at every sample time; the begin state is pinned to the first one.
  std::vector<NavState> states(imu_window.size());
  states[0] = x_b;
  states[0].time = imu_window[0].time;
  for (size_t i = 0; i + 1 < imu_window.size(); ++i) {
    states[i + 1] =
        midpoint_advance(states[i], imu_window[i], imu_window[i + 1], gravity);
  }

  auto pose_at = [&](double t) -> Pose {
    auto it = std::upper_bound(
        imu_window.begin(), imu_window.end(), t,
        [](double value, const ImuSample& s) { return value < s.time; });
    size_t k = it == imu_window.begin()
                   ? 0
                   : static_cast<size_t>(it - imu_window.begin()) - 1;
    if (k + 1 >= imu_window.size()) k = imu_window.size() - 2;
    if (t - imu_window[k].time < kTol) return states[k].pose();
    const ImuSample at_t = lerp_sample(imu_window[k], imu_window[k + 1], t);
    return midpoint_advance(states[k], imu_window[k], at_t, gravity).pose();
  };

  const Pose world_to_end = pose_at(sweep.t_end).inverse();
  std::vector<TimedPoint> out;
  out.reserve(sweep.points.size());
  for (const TimedPoint& p : sweep.points) {
    const double t = std::clamp(p.time, sweep.t_begin, sweep.t_end);
    const Pose imu_t = pose_at(t);
    out.push_back({world_to_end * (imu_t * (extrinsic * p.position)), p.time});
  }
  return out;
}

}  // namespace selio
