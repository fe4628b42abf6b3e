#include "selio/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace selio {

bool sample_trajectory(const Trajectory& reference, double time,
                       double max_extrapolation, TrajectorySample& out) {
  if (reference.empty()) return false;
  if (time < reference.front().time - max_extrapolation) return false;
  if (time > reference.back().time + max_extrapolation) return false;
  if (reference.size() == 1) {
    out = reference.front();
    out.time = time;
    return true;
  }

  auto upper = std::lower_bound(
      reference.begin(), reference.end(), time,
      [](const TrajectorySample& s, double t) { return s.time < t; });
  if (upper == reference.begin()) ++upper;
  if (upper == reference.end()) --upper;
  const TrajectorySample& a = *(upper - 1);
  const TrajectorySample& b = *upper;
  const double span = b.time - a.time;
  if (span <= 0.0) {
    throw std::invalid_argument("sample_trajectory: non-increasing timestamps");
  }
  const double alpha = std::clamp((time - a.time) / span, 0.0, 1.0);
  out.time = time;
  out.translation = (1.0 - alpha) * a.translation + alpha * b.translation;
  out.rotation = slerp(a.rotation, b.rotation, alpha);
  return true;
}

double ate_rmse(const Trajectory& estimate, const Trajectory& reference,
                const AteOptions& options) {
  std::vector<Vec3> est, ref;
  est.reserve(estimate.size());
  ref.reserve(estimate.size());
  TrajectorySample matched;
  for (const TrajectorySample& s : estimate) {
    if (!sample_trajectory(reference, s.time, options.max_extrapolation,
                           matched)) {
      continue;
    }
    est.push_back(s.translation);
    ref.push_back(matched.translation);
  }
  if (est.empty()) {
    throw std::invalid_argument("ate_rmse: no overlapping samples");
  }

  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();
  if (options.align) {
    const int n = static_cast<int>(est.size());
    if (n >= 3) {
      Eigen::Matrix3Xd src(3, n), dst(3, n);
      for (int i = 0; i < n; ++i) {
        src.col(i) = est[static_cast<size_t>(i)];
        dst.col(i) = ref[static_cast<size_t>(i)];
      }
      const Mat4 T = Eigen::umeyama(src, dst, false);
      R = T.topLeftCorner<3, 3>();
      t = T.topRightCorner<3, 1>();
    } else {
      Vec3 est_mean = Vec3::Zero(), ref_mean = Vec3::Zero();
      for (const Vec3& p : est) est_mean += p;
      for (const Vec3& p : ref) ref_mean += p;
      est_mean /= static_cast<double>(est.size());
      ref_mean /= static_cast<double>(ref.size());
      t = ref_mean - est_mean;
    }
  }

  double sum_sq = 0.0;
  for (size_t i = 0; i < est.size(); ++i) {
    sum_sq += (R * est[i] + t - ref[i]).squaredNorm();
  }
  return std::sqrt(sum_sq / static_cast<double>(est.size()));
}

namespace {

double second_difference_energy(const std::vector<double>& speeds) {
  if (speeds.size() < 3) return 0.0;
  double sum_sq = 0.0;
  for (size_t i = 1; i + 1 < speeds.size(); ++i) {
    const double d2 = speeds[i + 1] - 2.0 * speeds[i] + speeds[i - 1];
    sum_sq += d2 * d2;
  }
  return sum_sq / static_cast<double>(speeds.size() - 2);
}

}  // namespace

double velocity_smoothness(const std::vector<NavState>& states) {
  std::vector<double> speeds;
  speeds.reserve(states.size());
  for (const NavState& state : states) {
    speeds.push_back(state.v.norm());
  }
  return second_difference_energy(speeds);
}

double velocity_smoothness(const Trajectory& trajectory) {
  std::vector<double> speeds;
  speeds.reserve(trajectory.size());
  for (size_t i = 0; i + 1 < trajectory.size(); ++i) {
    const double dt = trajectory[i + 1].time - trajectory[i].time;
    if (dt <= 0.0) {
      throw std::invalid_argument(
          "velocity_smoothness: non-increasing timestamps");
    }
    speeds.push_back(
        (trajectory[i + 1].translation - trajectory[i].translation).norm() /
        dt);
  }
  return second_difference_energy(speeds);
}

double zigzag_score(const Trajectory& trajectory) {
  double weighted_sum = 0.0;
  double weight_total = 0.0;
  for (size_t i = 1; i + 1 < trajectory.size(); ++i) {
    const Vec3 prev = trajectory[i].translation - trajectory[i - 1].translation;
    const Vec3 next = trajectory[i + 1].translation - trajectory[i].translation;
    const double lp = prev.norm(), ln = next.norm();
    if (lp < 1e-12 || ln < 1e-12) continue;
    const double angle = std::atan2(prev.cross(next).norm(), prev.dot(next));
    const double weight = 0.5 * (lp + ln);
    weighted_sum += weight * angle;
    weight_total += weight;
  }
  return weight_total > 0.0 ? weighted_sum / weight_total : 0.0;
}

}  // namespace selio
