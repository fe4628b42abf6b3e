#include "selio/imu_preintegration.hpp"

#include <cmath>
#include <stdexcept>

namespace selio {

namespace {

// One averaged-measurement midpoint step.  The body-frame average of two
// consecutive samples is applied with the rotation at the start of the
// interval; the same rule is used by the state prediction, which is what
// makes the pre-integration residual vanish on prediction-generated states.
struct Step {
  Vec3 u;      // rotation increment (w_avg - bw) * dt
  Vec3 a_c;    // bias-corrected accel average
  double dt;
};

Step make_step(const ImuSample& s0, const ImuSample& s1, const Vec3& ba,
               const Vec3& bw) {
  const double dt = s1.time - s0.time;
  return {(0.5 * (s0.gyro + s1.gyro) - bw) * dt,
          0.5 * (s0.accel + s1.accel) - ba, dt};
}

}  // namespace

Preintegration integrate(std::span<const ImuSample> samples, const Vec3& ba,
                         const Vec3& bw, const ImuNoiseModel& noise) {
  if (samples.size() < 2) {
    throw std::invalid_argument("integrate: need at least two IMU samples");
  }
  Preintegration out;
  out.ref_ba = ba;
  out.ref_bw = bw;

  for (size_t i = 0; i + 1 < samples.size(); ++i) {
    if (!(samples[i + 1].time > samples[i].time)) {
      throw std::invalid_argument("integrate: non-increasing IMU timestamps");
    }
    const Step s = make_step(samples[i], samples[i + 1], ba, bw);
    const Mat3 R = out.gamma.matrix();
    const Mat3 Jr = right_jacobian(s.u);
    const Rotation dq = Rotation::exp(s.u);

    // Error-state transition (t, th, v, ba, bw).
    Mat15 F = Mat15::Identity();
    F.block<3, 3>(kErrT, kErrTheta) = -0.5 * R * skew(s.a_c) * s.dt * s.dt;
    F.block<3, 3>(kErrT, kErrV) = Mat3::Identity() * s.dt;
    F.block<3, 3>(kErrT, kErrBa) = -0.5 * R * s.dt * s.dt;
    F.block<3, 3>(kErrTheta, kErrTheta) = dq.matrix().transpose();
    F.block<3, 3>(kErrTheta, kErrBw) = -Jr * s.dt;
    F.block<3, 3>(kErrV, kErrTheta) = -R * skew(s.a_c) * s.dt;
    F.block<3, 3>(kErrV, kErrBa) = -R * s.dt;

    // Noise input (accel avg, gyro avg, accel walk, gyro walk).  Averaging
    // two independent samples halves the white-noise variance.
    Eigen::Matrix<double, 15, 12> G = Eigen::Matrix<double, 15, 12>::Zero();
    G.block<3, 3>(kErrT, 0) = 0.5 * R * s.dt * s.dt;
    G.block<3, 3>(kErrTheta, 3) = Jr * s.dt;
    G.block<3, 3>(kErrV, 0) = R * s.dt;
    G.block<3, 3>(kErrBa, 6) = Mat3::Identity();
    G.block<3, 3>(kErrBw, 9) = Mat3::Identity();

    Eigen::Matrix<double, 12, 12> Q = Eigen::Matrix<double, 12, 12>::Zero();
    const double sa2 = noise.sigma_accel * noise.sigma_accel / (2.0 * s.dt);
    const double sg2 = noise.sigma_gyro * noise.sigma_gyro / (2.0 * s.dt);
    Q.block<3, 3>(0, 0) = sa2 * Mat3::Identity();
    Q.block<3, 3>(3, 3) = sg2 * Mat3::Identity();
    Q.block<3, 3>(6, 6) =
        noise.sigma_accel_bias * noise.sigma_accel_bias * s.dt * Mat3::Identity();
    Q.block<3, 3>(9, 9) =
        noise.sigma_gyro_bias * noise.sigma_gyro_bias * s.dt * Mat3::Identity();

    out.covariance = F * out.covariance * F.transpose() + G * Q * G.transpose();
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
    out.jacobian = F * out.jacobian;

    // State integrals; rotation advances last so R above is the start value.
    const Vec3 body_acc = out.gamma * s.a_c;
    out.alpha += out.beta * s.dt + 0.5 * body_acc * s.dt * s.dt;
    out.beta += body_acc * s.dt;
    out.gamma = out.gamma * dq;
    out.dt += s.dt;
    ++out.steps;
  }
  return out;
}

NavState midpoint_advance(const NavState& x, const ImuSample& s0,
                          const ImuSample& s1, const Vec3& gravity) {
  const double dt = s1.time - s0.time;
  if (!(dt > 0.0)) {
    throw std::invalid_argument("midpoint_advance: non-increasing timestamps");
  }
  const Step s = make_step(s0, s1, x.ba, x.bw);
  const Vec3 world_acc = x.q * s.a_c - gravity;
  NavState out = x;
  out.t = x.t + x.v * dt + 0.5 * world_acc * dt * dt;
  out.v = x.v + world_acc * dt;
  out.q = x.q * Rotation::exp(s.u);
  out.time = s1.time;
  return out;
}

Preintegration bias_corrected(const Preintegration& pre, const Vec3& new_ba,
                              const Vec3& new_bw) {
  const Vec3 dba = new_ba - pre.ref_ba;
  const Vec3 dbw = new_bw - pre.ref_bw;
  Preintegration out = pre;
  out.alpha += pre.dalpha_dba() * dba + pre.dalpha_dbw() * dbw;
  out.beta += pre.dbeta_dba() * dba + pre.dbeta_dbw() * dbw;
  out.gamma = pre.gamma * Rotation::exp(pre.dgamma_dbw() * dbw);
  out.ref_ba = new_ba;
  out.ref_bw = new_bw;
  return out;
}

namespace {

void check_window(const Preintegration& pre, const NavState& x_b,
                  const NavState& x_e) {
  const double nominal = pre.dt / static_cast<double>(pre.steps);
  if (std::abs((x_e.time - x_b.time) - pre.dt) > nominal) {
    throw std::invalid_argument(
        "imu_residual: pre-integration window does not match state timestamps");
  }
}

}  // namespace

Vec15 imu_residual(const Preintegration& pre, const NavState& x_b,
                   const NavState& x_e, const Vec3& gravity) {
  check_window(pre, x_b, x_e);
  const Preintegration corr = bias_corrected(pre, x_b.ba, x_b.bw);
  const double dt = pre.dt;
  const Mat3 Rbw = x_b.q.matrix().transpose();

  const Eigen::Quaterniond q_err = x_b.q.quat().conjugate() * x_e.q.quat() *
                                   corr.gamma.quat().conjugate();
  const double sign = q_err.w() < 0.0 ? -1.0 : 1.0;

  Vec15 r;
  r.segment<3>(kErrT) =
      Rbw * (x_e.t - x_b.t + 0.5 * gravity * dt * dt - x_b.v * dt) - corr.alpha;
  r.segment<3>(kErrTheta) = 2.0 * sign * q_err.vec();
  r.segment<3>(kErrV) = Rbw * (x_e.v + gravity * dt - x_b.v) - corr.beta;
  r.segment<3>(kErrBa) = x_e.ba - x_b.ba;
  r.segment<3>(kErrBw) = x_e.bw - x_b.bw;
  return r;
}

ImuResidualJacobian imu_residual_jacobian(const Preintegration& pre,
                                          const NavState& x_b,
                                          const NavState& x_e,
                                          const Vec3& gravity) {
  check_window(pre, x_b, x_e);
  const Preintegration corr = bias_corrected(pre, x_b.ba, x_b.bw);
  const double dt = pre.dt;
  const Mat3 Rbw = x_b.q.matrix().transpose();
  const Mat3 I = Mat3::Identity();

  const Vec3 u_t = x_e.t - x_b.t + 0.5 * gravity * dt * dt - x_b.v * dt;
  const Vec3 u_v = x_e.v + gravity * dt - x_b.v;

  const Eigen::Quaterniond A = x_b.q.quat().conjugate() * x_e.q.quat();
  const Eigen::Quaterniond Gc_inv = corr.gamma.quat().conjugate();
  const Eigen::Quaterniond q_err = A * Gc_inv;
  const double sign = q_err.w() < 0.0 ? -1.0 : 1.0;

  ImuResidualJacobian out;
  out.residual.segment<3>(kErrT) = Rbw * u_t - corr.alpha;
  out.residual.segment<3>(kErrTheta) = 2.0 * sign * q_err.vec();
  out.residual.segment<3>(kErrV) = Rbw * u_v - corr.beta;
  out.residual.segment<3>(kErrBa) = x_e.ba - x_b.ba;
  out.residual.segment<3>(kErrBw) = x_e.bw - x_b.bw;

  auto& J = out.jacobian;
  J.setZero();
  constexpr int B = 0;   // x_b error columns
  constexpr int E = 15;  // x_e error columns

  // Translation block.
  J.block<3, 3>(kErrT, B + kErrT) = -Rbw;
  J.block<3, 3>(kErrT, B + kErrTheta) = skew(Rbw * u_t);
  J.block<3, 3>(kErrT, B + kErrV) = -Rbw * dt;
  J.block<3, 3>(kErrT, B + kErrBa) = -pre.dalpha_dba();
  J.block<3, 3>(kErrT, B + kErrBw) = -pre.dalpha_dbw();
  J.block<3, 3>(kErrT, E + kErrT) = Rbw;

  // Rotation block.  Right-perturbations enter the quaternion product
  // q_b^-1 * q_e * gamma^-1 at three positions; each derivative is the
  // bottom-right 3x3 of the corresponding 4x4 product matrix.
  const Mat3 D_right = quat_right(q_err).bottomRightCorner<3, 3>();
  const Mat3 D_mid =
      (quat_left(A) * quat_right(Gc_inv)).bottomRightCorner<3, 3>();
  const Vec3 a_corr = pre.dgamma_dbw() * (x_b.bw - pre.ref_bw);
  J.block<3, 3>(kErrTheta, B + kErrTheta) = -sign * D_right;
  J.block<3, 3>(kErrTheta, B + kErrBw) =
      -sign * D_mid * right_jacobian(a_corr) * pre.dgamma_dbw();
  J.block<3, 3>(kErrTheta, E + kErrTheta) = sign * D_mid;

  // Velocity block.
  J.block<3, 3>(kErrV, B + kErrTheta) = skew(Rbw * u_v);
  J.block<3, 3>(kErrV, B + kErrV) = -Rbw;
  J.block<3, 3>(kErrV, B + kErrBa) = -pre.dbeta_dba();
  J.block<3, 3>(kErrV, B + kErrBw) = -pre.dbeta_dbw();
  J.block<3, 3>(kErrV, E + kErrV) = Rbw;

  // Bias differences.
  J.block<3, 3>(kErrBa, B + kErrBa) = -I;
  J.block<3, 3>(kErrBa, E + kErrBa) = I;
  J.block<3, 3>(kErrBw, B + kErrBw) = -I;
  J.block<3, 3>(kErrBw, E + kErrBw) = I;

  return out;
}

}  // namespace selio
