#include "selio/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace selio {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Rotation Rotation::canonical(Eigen::Quaterniond q) {
  q.normalize();
  bool flip = q.w() < 0.0;
  if (q.w() == 0.0) {
    // Angle pi: pick the half of the double cover with the first nonzero
    // vector component positive so the representation stays deterministic.
    if (q.x() != 0.0) {
      flip = q.x() < 0.0;
    } else if (q.y() != 0.0) {
      flip = q.y() < 0.0;
    } else {
      flip = q.z() < 0.0;
    }
  }
  if (flip) q.coeffs() = -q.coeffs();
  return Rotation(q, Raw{});
}

Rotation Rotation::from_quaternion(double w, double x, double y, double z) {
  return canonical(Eigen::Quaterniond(w, x, y, z));
}

Rotation Rotation::from_quaternion(const Eigen::Quaterniond& q) {
  return canonical(q);
}

Rotation Rotation::from_matrix(const Mat3& m) {
  return canonical(Eigen::Quaterniond(m));
}

Rotation Rotation::exp(const Vec3& omega) {
  const double theta = omega.norm();
  double w, k;  // q = (w, k * omega)
  if (theta < kSmallAngle) {
    // Second-order Taylor of cos(t/2) and sin(t/2)/t.
    const double t2 = theta * theta;
    w = 1.0 - t2 / 8.0;
    k = 0.5 - t2 / 48.0;
  } else {
    w = std::cos(0.5 * theta);
    k = std::sin(0.5 * theta) / theta;
  }
  return canonical(Eigen::Quaterniond(w, k * omega.x(), k * omega.y(), k * omega.z()));
}

Vec3 Rotation::log() const {
  const Vec3 xyz(q_.x(), q_.y(), q_.z());
  const double s = xyz.norm();
  const double w = q_.w();  // >= 0, so the angle is in [0, pi]
  if (s < kSmallAngle) {
    const double k = 2.0 / w * (1.0 - s * s / (3.0 * w * w));
    return k * xyz;
  }
  const double theta = 2.0 * std::atan2(s, w);
  return (theta / s) * xyz;
}

Rotation Rotation::inverse() const {
  return Rotation(q_.conjugate(), Raw{});  // conjugation preserves w >= 0
}

Rotation Rotation::operator*(const Rotation& rhs) const {
  return canonical(q_ * rhs.q_);
}

double Rotation::angle_to(const Rotation& other) const {
  return (inverse() * other).log().norm();
}

Rotation slerp(const Rotation& a, const Rotation& b, double alpha) {
  return a * Rotation::exp(alpha * (a.inverse() * b).log());
}

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation.matrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Pose interpolate_pose(const Pose& a, const Pose& b, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("interpolate_pose: alpha outside [0, 1]");
  }
  return {slerp(a.rotation, b.rotation, alpha),
          (1.0 - alpha) * a.translation + alpha * b.translation};
}

NavState boxplus(const NavState& x, const Vec15& delta) {
  NavState out = x;
  out.t += delta.segment<3>(kErrT);
  out.q = x.q * Rotation::exp(delta.segment<3>(kErrTheta));
  out.v += delta.segment<3>(kErrV);
  out.ba += delta.segment<3>(kErrBa);
  out.bw += delta.segment<3>(kErrBw);
  return out;
}

Vec15 boxminus(const NavState& a, const NavState& b) {
  Vec15 d;
  d.segment<3>(kErrT) = a.t - b.t;
  d.segment<3>(kErrTheta) = (b.q.inverse() * a.q).log();
  d.segment<3>(kErrV) = a.v - b.v;
  d.segment<3>(kErrBa) = a.ba - b.ba;
  d.segment<3>(kErrBw) = a.bw - b.bw;
  return d;
}

Mat3 right_jacobian(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 px = skew(phi);
  double c1, c2;
  if (theta < 1e-4) {
    const double t2 = theta * theta;
    c1 = 0.5 - t2 / 24.0;
    c2 = 1.0 / 6.0 - t2 / 120.0;
  } else {
    c1 = (1.0 - std::cos(theta)) / (theta * theta);
    c2 = (theta - std::sin(theta)) / (theta * theta * theta);
  }
  return Mat3::Identity() - c1 * px + c2 * px * px;
}

Mat3 left_jacobian(const Vec3& phi) { return right_jacobian(-phi); }

Mat3 right_jacobian_inv(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 px = skew(phi);
  double c3;
  if (theta < 1e-3) {
    const double t2 = theta * theta;
    c3 = 1.0 / 12.0 + t2 / 720.0;
  } else {
    c3 = 1.0 / (theta * theta) -
         (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  return Mat3::Identity() + 0.5 * px + c3 * px * px;
}

Mat3 left_jacobian_inv(const Vec3& phi) { return right_jacobian_inv(-phi); }

Mat4 quat_left(const Eigen::Quaterniond& q) {
  Mat4 m;
  const Vec3 v(q.x(), q.y(), q.z());
  m(0, 0) = q.w();
  m.block<1, 3>(0, 1) = -v.transpose();
  m.block<3, 1>(1, 0) = v;
  m.block<3, 3>(1, 1) = q.w() * Mat3::Identity() + skew(v);
  return m;
}

Mat4 quat_right(const Eigen::Quaterniond& q) {
  Mat4 m;
  const Vec3 v(q.x(), q.y(), q.z());
  m(0, 0) = q.w();
  m.block<1, 3>(0, 1) = -v.transpose();
  m.block<3, 1>(1, 0) = v;
  m.block<3, 3>(1, 1) = q.w() * Mat3::Identity() - skew(v);
  return m;
}

}  // namespace selio
