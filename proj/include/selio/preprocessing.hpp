#pragma once

#include <span>
#include <vector>

#include "selio/geometry.hpp"
#include "selio/imu_types.hpp"

namespace selio {

struct TimedPoint {
  Vec3 position = Vec3::Zero();  // sensor frame unless stated otherwise
  double time = 0.0;
};

struct Sweep {
  std::vector<TimedPoint> points;
  double t_begin = 0.0;
  double t_end = 0.0;
  int index = 0;
};

/// Keeps every step-th point starting at index 0; output size ceil(n/step).
std::vector<TimedPoint> quantitative_downsample(std::span<const TimedPoint> points,
                                                int step = 4);

/// Keeps the first point that lands in each voxel cell, preserving input
/// order.  No two output points share a cell.
std::vector<TimedPoint> voxel_downsample(std::span<const TimedPoint> points,
                                         double voxel_size);

/// Motion compensation under the uniform (interpolated begin/end pose) model.
/// Each point is moved to where the sensor would have measured it at t_end,
/// expressed in the IMU frame at t_end.  `extrinsic` maps sensor coordinates
/// into the IMU frame.  Timestamps are preserved.
std::vector<TimedPoint> undistort_uniform(const Sweep& sweep,
                                          const NavState& x_b,
                                          const NavState& x_e,
                                          const Pose& extrinsic);

/// Motion compensation by forward IMU integration from x_b.  Per-point poses
/// come from the same averaged-measurement midpoint rule as the prediction,
/// with a partial step (linearly interpolated sample) up to each timestamp.
/// `gravity` is the world vector subtracted during velocity integration.
/// Throws DataError when the samples do not cover [t_begin, t_end] or leave a
/// gap wider than twice the nominal sample period.
std::vector<TimedPoint> undistort_imu(const Sweep& sweep,
                                      std::span<const ImuSample> imu_window,
                                      const NavState& x_b, const Pose& extrinsic,
                                      const Vec3& gravity);

}  // namespace selio
