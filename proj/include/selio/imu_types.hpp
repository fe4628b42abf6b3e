#pragma once

#include "selio/geometry.hpp"

namespace selio {

struct ImuSample {
  double time = 0.0;
  Vec3 accel = Vec3::Zero();  // specific force, body frame [m/s^2]
  Vec3 gyro = Vec3::Zero();   // angular rate, body frame [rad/s]
};

/// Continuous-time noise densities.  The white-noise terms are in
/// [unit/sqrt(Hz)]; sampling at rate f turns them into per-sample standard
/// deviations sigma * sqrt(f).  The bias terms are random-walk densities.
struct ImuNoiseModel {
  double sigma_accel = 0.02;        // [m/s^2/sqrt(Hz)]
  double sigma_gyro = 0.002;        // [rad/s/sqrt(Hz)]
  double sigma_accel_bias = 2e-4;   // [m/s^3/sqrt(Hz)]
  double sigma_gyro_bias = 2e-5;    // [rad/s^2/sqrt(Hz)]
};

}  // namespace selio
