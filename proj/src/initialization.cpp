#include "selio/initialization.hpp"

#include <cmath>

#include "selio/errors.hpp"

namespace selio {

InitResult static_init(std::span<const ImuSample> samples,
                       const InitConfig& config) {
  if (samples.empty()) throw DataError("static_init: no IMU samples");
  const double t_limit = samples.front().time + config.window;

  Vec3 mean_accel = Vec3::Zero();
  Vec3 mean_gyro = Vec3::Zero();
  int n = 0;
  for (const ImuSample& s : samples) {
    if (s.time > t_limit) break;
    mean_accel += s.accel;
    mean_gyro += s.gyro;
    ++n;
  }
  if (n < 2) throw DataError("static_init: window holds fewer than two samples");
  mean_accel /= n;
  mean_gyro /= n;

  double var = 0.0;
  const double mean_norm = mean_accel.norm();
  int i = 0;
  for (const ImuSample& s : samples) {
    if (s.time > t_limit) break;
    const double d = s.accel.norm() - mean_norm;
    var += d * d;
    ++i;
  }
  var /= n;
  if (var > config.stationarity_threshold) {
    throw DataError("static_init: motion detected (accel-norm variance above "
                    "stationarity threshold)");
  }
  if (mean_norm < 1e-6) {
    throw DataError("static_init: mean specific force is zero");
  }

  InitResult out;
  out.accel_norm_variance = var;
  out.bw = mean_gyro;
  out.g_w = Vec3(0.0, 0.0, config.gravity_norm);

  // Minimal (zero-yaw) rotation taking the measured specific-force direction
  // onto world +z: a stationary, unbiased accelerometer reads R_w^o * g_w.
  const Vec3 dir = mean_accel / mean_norm;
  const Vec3 z = Vec3::UnitZ();
  const Vec3 axis_raw = dir.cross(z);
  const double sin_a = axis_raw.norm();
  const double cos_a = dir.dot(z);
  Rotation q0;
  if (sin_a < 1e-12) {
    q0 = cos_a > 0.0 ? Rotation::identity()
                     : Rotation::exp(Vec3(M_PI, 0.0, 0.0));  // upside down
  } else {
    q0 = Rotation::exp(std::atan2(sin_a, cos_a) * axis_raw / sin_a);
  }

  out.ba = mean_accel - q0.inverse() * out.g_w;
  out.state.q = q0;
  out.state.t = Vec3::Zero();
  out.state.v = Vec3::Zero();
  out.state.ba = out.ba;
  out.state.bw = out.bw;
  out.state.time = samples.front().time;
  return out;
}

}  // namespace selio
