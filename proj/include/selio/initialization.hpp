#pragma once

#include <span>

#include "selio/geometry.hpp"
#include "selio/imu_types.hpp"

namespace selio {

struct InitConfig {
  double window = 1.0;                  // [s] of samples to average
  double stationarity_threshold = 0.05; // accel-norm variance gate [(m/s^2)^2]
  double gravity_norm = 9.81;
};

struct InitResult {
  Vec3 g_w = Vec3::Zero();  // world gravity compensation vector, (0,0,norm)
  Vec3 ba = Vec3::Zero();
  Vec3 bw = Vec3::Zero();
  NavState state;           // origin pose with gauge-fixed tilt, v = 0
  double accel_norm_variance = 0.0;  // excitation diagnostic
};

/// Static alignment over a stationary sample window.  The world frame is
/// fixed so that +z opposes gravity and the initial yaw is zero; the initial
/// rotation is the minimal rotation taking the mean specific-force direction
/// onto +z.  Throws DataError when fewer than two samples fall inside the
/// window or when the accel-norm variance exceeds the stationarity gate.
InitResult static_init(std::span<const ImuSample> samples,
                       const InitConfig& config = {});

}  // namespace selio
