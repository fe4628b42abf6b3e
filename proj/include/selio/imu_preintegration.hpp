#pragma once

#include <span>
#include <vector>

#include "selio/geometry.hpp"
#include "selio/imu_types.hpp"

namespace selio {

/// Relative motion integral over one sweep interval, expressed in the body
/// frame of the first sample.  alpha/beta/gamma absorb the raw measurements
/// minus the reference biases; gravity is not removed here, so the consumer
/// has to add the 0.5*g*dt^2 / g*dt terms when forming residuals.
struct Preintegration {
  Vec3 alpha = Vec3::Zero();   // position integral [m]
  Vec3 beta = Vec3::Zero();    // velocity integral [m/s]
  Rotation gamma;              // rotation integral
  double dt = 0.0;             // total integration time [s]

  Vec3 ref_ba = Vec3::Zero();  // biases the integral was evaluated at
  Vec3 ref_bw = Vec3::Zero();

  Mat15 covariance = Mat15::Zero();  // error-state covariance, (t,th,v,ba,bw)
  Mat15 jacobian = Mat15::Identity();  // error-state transition product

  int steps = 0;

  // First-order sensitivities to the reference biases, blocks of `jacobian`.
  Mat3 dalpha_dba() const { return jacobian.block<3, 3>(kErrT, kErrBa); }
  Mat3 dalpha_dbw() const { return jacobian.block<3, 3>(kErrT, kErrBw); }
  Mat3 dbeta_dba() const { return jacobian.block<3, 3>(kErrV, kErrBa); }
  Mat3 dbeta_dbw() const { return jacobian.block<3, 3>(kErrV, kErrBw); }
  Mat3 dgamma_dbw() const { return jacobian.block<3, 3>(kErrTheta, kErrBw); }
};

/// Integrates consecutive sample pairs with the averaged-measurement midpoint
/// rule.  Requires at least two samples with strictly increasing timestamps;
/// throws std::invalid_argument otherwise.
Preintegration integrate(std::span<const ImuSample> samples, const Vec3& ba,
                         const Vec3& bw, const ImuNoiseModel& noise);

/// One world-frame step of the same midpoint rule: the averaged measurement
/// pair advances the state from s0.time to s1.time.  `gravity` is the world
/// vector subtracted from the rotated specific force (z-up: (0,0,9.81)).
NavState midpoint_advance(const NavState& x, const ImuSample& s0,
                          const ImuSample& s1, const Vec3& gravity);

/// First-order update of the integrals to new biases without re-integration.
Preintegration bias_corrected(const Preintegration& pre, const Vec3& new_ba,
                              const Vec3& new_bw);

/// 15-dim residual tying (x_b, x_e) to the pre-integrated motion, stacked in
/// error-state order: translation, rotation, velocity, accel bias, gyro bias.
/// The bias correction to x_b's biases is applied internally.  `gravity` is
/// the world vector subtracted during velocity integration (z-up: (0,0,9.81)).
/// Throws std::invalid_argument when pre.dt and the state timestamps disagree
/// by more than one nominal sample period.
Vec15 imu_residual(const Preintegration& pre, const NavState& x_b,
                   const NavState& x_e, const Vec3& gravity);

struct ImuResidualJacobian {
  Vec15 residual;
  // d(residual)/d(error of x_b | error of x_e), both in (t,th,v,ba,bw) order.
  Eigen::Matrix<double, 15, 30> jacobian;
};

/// Residual plus exact first-order Jacobian with respect to both states.
ImuResidualJacobian imu_residual_jacobian(const Preintegration& pre,
                                          const NavState& x_b,
                                          const NavState& x_e,
                                          const Vec3& gravity);

}  // namespace selio
