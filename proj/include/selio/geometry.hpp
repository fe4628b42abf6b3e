#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace selio {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Vec15 = Eigen::Matrix<double, 15, 1>;
using Mat15 = Eigen::Matrix<double, 15, 15>;

// Offsets into the 15-dim error state (dt, dtheta, dv, dba, dbw).  The same
// layout is shared by the pre-integration covariance, every stacked residual
// and the optimizer increment, so changing it here changes all of them.
inline constexpr int kErrT = 0;
inline constexpr int kErrTheta = 3;
inline constexpr int kErrV = 6;
inline constexpr int kErrBa = 9;
inline constexpr int kErrBw = 12;
inline constexpr int kErrDim = 15;

// Rotation angle below which exp/log switch to their Taylor expansions.
inline constexpr double kSmallAngle = 1e-8;

Mat3 skew(const Vec3& v);

/// Unit quaternion with the double cover resolved: after every operation the
/// stored quaternion is normalized and has w >= 0.  Ties at w == 0 are broken
/// by requiring the first nonzero component of (x, y, z) to be positive.
class Rotation {
 public:
  Rotation() : q_(1.0, 0.0, 0.0, 0.0) {}

  static Rotation identity() { return Rotation(); }

  /// Normalizes and canonicalizes the given coefficients.
  static Rotation from_quaternion(double w, double x, double y, double z);
  static Rotation from_quaternion(const Eigen::Quaterniond& q);
  static Rotation from_matrix(const Mat3& m);

  /// Exponential map, axis-angle vector -> rotation.
  static Rotation exp(const Vec3& omega);

  /// Logarithmic map into the ball of radius pi.  The canonical form makes
  /// the result unique except at angle == pi, where the sign follows the
  /// stored (canonical) quaternion.
  Vec3 log() const;

  Rotation inverse() const;
  Rotation operator*(const Rotation& rhs) const;
  Vec3 operator*(const Vec3& p) const { return q_ * p; }

  Mat3 matrix() const { return q_.toRotationMatrix(); }
  const Eigen::Quaterniond& quat() const { return q_; }
  double w() const { return q_.w(); }
  double x() const { return q_.x(); }
  double y() const { return q_.y(); }
  double z() const { return q_.z(); }

  /// Geodesic distance to another rotation, in radians.
  double angle_to(const Rotation& other) const;

 private:
  struct Raw {};
  Rotation(const Eigen::Quaterniond& q, Raw) : q_(q) {}
  static Rotation canonical(Eigen::Quaterniond q);

  Eigen::Quaterniond q_;
};

/// Geodesic interpolation; equals shortest-arc slerp for alpha in [0, 1].
Rotation slerp(const Rotation& a, const Rotation& b, double alpha);

struct Pose {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  Pose() = default;
  Pose(const Rotation& r, const Vec3& t) : rotation(r), translation(t) {}

  Pose operator*(const Pose& rhs) const {
    return {rotation * rhs.rotation, translation + rotation * rhs.translation};
  }
  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }

  Pose inverse() const {
    Rotation ri = rotation.inverse();
    return {ri, -(ri * translation)};
  }

  Mat4 matrix() const;
};

/// Pose interpolation: geodesic in rotation, linear in translation.
/// Throws std::invalid_argument if alpha is outside [0, 1].
Pose interpolate_pose(const Pose& a, const Pose& b, double alpha);

struct NavState {
  Vec3 t = Vec3::Zero();
  Rotation q;
  Vec3 v = Vec3::Zero();
  Vec3 ba = Vec3::Zero();
  Vec3 bw = Vec3::Zero();
  double time = 0.0;

  Pose pose() const { return {q, t}; }
};

/// Retraction of a 15-dim error vector onto the state.  The rotation block is
/// applied on the right: q' = q * exp(dtheta).  Timestamps are unchanged.
NavState boxplus(const NavState& x, const Vec15& delta);

/// Inverse of boxplus in its first argument: boxminus(boxplus(x, d), x) == d.
Vec15 boxminus(const NavState& a, const NavState& b);

// SO(3) Jacobians of the exponential map (right/left convention:
// exp(phi + d) ~= exp(phi) * exp(Jr(phi) d) ~= exp(Jl(phi) d) * exp(phi)).
Mat3 right_jacobian(const Vec3& phi);
Mat3 left_jacobian(const Vec3& phi);
Mat3 right_jacobian_inv(const Vec3& phi);
Mat3 left_jacobian_inv(const Vec3& phi);

// 4x4 quaternion product matrices in [w, x, y, z] ordering:
// a * b == quat_left(a) * b == quat_right(b) * a.
Mat4 quat_left(const Eigen::Quaterniond& q);
Mat4 quat_right(const Eigen::Quaterniond& q);

inline Eigen::Vector4d quat_coeffs_wxyz(const Eigen::Quaterniond& q) {
  return {q.w(), q.x(), q.y(), q.z()};
}

}  // namespace selio
