#include "selio/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Cholesky>

#include "selio/errors.hpp"

namespace selio {

Prediction predict(const NavState& x_prev_end,
                   std::span<const ImuSample> window, const Vec3& gravity) {
  if (window.size() < 2) {
    throw std::invalid_argument("predict: need at least two IMU samples");
  }
  Prediction out;
  out.x_b = x_prev_end;
  NavState x = x_prev_end;
  x.time = window.front().time;
  for (size_t i = 0; i + 1 < window.size(); ++i) {
    x = midpoint_advance(x, window[i], window[i + 1], gravity);
  }
  out.x_e = x;
  return out;
}

PointResidual point_residual(const Vec3& p_end_frame, const PlaneFit& plane,
                             const NavState& x_e, double weight) {
  const Vec3 pw = x_e.q * p_end_frame + x_e.t;
  PointResidual out;
  out.value = weight * (plane.normal.dot(pw) + plane.d);
  out.jacobian.block<1, 3>(0, 0) = weight * plane.normal.transpose();
  out.jacobian.block<1, 3>(0, 3) =
      -weight * plane.normal.transpose() * x_e.q.matrix() * skew(p_end_frame);
  return out;
}

ElasticPointResidual elastic_point_residual(const Vec3& p_imu_frame,
                                            double alpha, const PlaneFit& plane,
                                            const NavState& x_b,
                                            const NavState& x_e, double weight) {
  const Vec3 phi = (x_b.q.inverse() * x_e.q).log();
  const Rotation q_alpha = x_b.q * Rotation::exp(alpha * phi);
  const Vec3 t_alpha = (1.0 - alpha) * x_b.t + alpha * x_e.t;
  const Vec3 pw = q_alpha * p_imu_frame + t_alpha;

  ElasticPointResidual out;
  out.value = weight * (plane.normal.dot(pw) + plane.d);

  // d(pw)/d(dtheta) through both the interpolation endpoints; the rotation
  // increment alpha * log(q_b^-1 q_e) is differentiated with the chain of
  // right/left Jacobians of the exponential map.
  const Mat3 R_alpha = q_alpha.matrix();
  const Mat3 M = R_alpha * skew(p_imu_frame) * right_jacobian(alpha * phi);
  const Mat3 dpw_dthb = -skew(q_alpha * p_imu_frame) * x_b.q.matrix() +
                        alpha * M * left_jacobian_inv(phi);
  const Mat3 dpw_dthe = -alpha * M * right_jacobian_inv(phi);

  const Eigen::RowVector3d nT = weight * plane.normal.transpose();
  out.jacobian.block<1, 3>(0, 0) = (1.0 - alpha) * nT;
  out.jacobian.block<1, 3>(0, 3) = nT * dpw_dthb;
  out.jacobian.block<1, 3>(0, 6) = alpha * nT;
  out.jacobian.block<1, 3>(0, 9) = nT * dpw_dthe;
  return out;
}

LogicalResidual logical_residual(const NavState& x_b,
                                 const NavState& x_prev_end) {
  const Eigen::Quaterniond q_err =
      x_prev_end.q.quat().conjugate() * x_b.q.quat();
  const double sign = q_err.w() < 0.0 ? -1.0 : 1.0;

  LogicalResidual out;
  out.residual.segment<3>(kErrT) = x_b.t - x_prev_end.t;
  out.residual.segment<3>(kErrTheta) = 2.0 * sign * q_err.vec();
  out.residual.segment<3>(kErrV) = x_b.v - x_prev_end.v;
  out.residual.segment<3>(kErrBa) = x_b.ba - x_prev_end.ba;
  out.residual.segment<3>(kErrBw) = x_b.bw - x_prev_end.bw;

  out.jacobian = Mat15::Identity();
  out.jacobian.block<3, 3>(kErrTheta, kErrTheta) =
      sign * quat_left(q_err).bottomRightCorner<3, 3>();
  return out;
}

namespace {

struct Association {
  Vec3 p;             // end-frame point, or IMU-frame point in elastic mode
  double alpha = 1.0; // sweep fraction, elastic mode only
  PlaneFit plane;
  double weight = 1.0;
};

double huber_cost(double squared_norm, double delta) {
  const double d2 = delta * delta;
  if (squared_norm <= d2) return squared_norm;
  return 2.0 * delta * std::sqrt(squared_norm) - d2;
}

double huber_weight(double norm, double delta) {
  return norm <= delta ? 1.0 : delta / norm;
}

using Mat30 = Eigen::Matrix<double, 30, 30>;
using Vec30 = Eigen::Matrix<double, 30, 1>;

}  // namespace

SweepEstimate optimize_sweep(const Sweep& sweep, const VoxelMap& map,
                             const NavState& x_prev_end,
                             const Prediction& prediction,
                             const Preintegration& pre,
                             std::span<const ImuSample> imu_window,
                             const Pose& extrinsic, const Vec3& gravity,
                             const EstimatorConfig& cfg) {
  const bool elastic = cfg.mode == Mode::kElastic;
  const double inv_sqrt_pc = 1.0 / std::sqrt(cfg.point_cov);
  Vec15 logical_w;
  logical_w.segment<3>(0).setConstant(cfg.logical_weight_position);
  logical_w.segment<3>(3).setConstant(cfg.logical_weight_rotation);
  logical_w.segment<3>(6).setConstant(cfg.logical_weight_velocity);
  logical_w.segment<6>(9).setConstant(cfg.logical_weight_bias);
  logical_w *= cfg.logical_weight;
  // Beyond this stiffness a quadratic tie is numerically indistinguishable
  // from a hard equality constraint, while solving it as a finite penalty
  // only feeds ill-conditioning noise into the increments.  Eliminating the
  // begin state instead realizes the limit exactly.
  constexpr double kRigidTieWeight = 1e9;
  const bool rigid_tie =
      cfg.mode == Mode::kSemiElastic && logical_w.minCoeff() >= kRigidTieWeight;
  // The begin-state tie to the previous end state is what distinguishes the
  // semi-elastic coupling: traditional freezes the begin state instead, and
  // elastic leaves it entirely free.
  const bool frozen_begin = cfg.mode == Mode::kTraditional || rigid_tie;
  const bool tie_begin = cfg.mode == Mode::kSemiElastic && !rigid_tie;
  const double span = sweep.t_end - sweep.t_begin;

  const Mat15 cov = 0.5 * (pre.covariance + pre.covariance.transpose());
  const Eigen::LLT<Mat15> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(
        "optimize_sweep: pre-integration covariance is not positive definite");
  }
  const Mat15 sqrt_info = llt.matrixL().solve(Mat15::Identity());

  NavState x_b = prediction.x_b;
  NavState x_e = prediction.x_e;

  // Elastic mode keeps raw points in the per-point IMU frame; the pose
  // interpolation inside the residual is the motion compensation.
  std::vector<Association> assoc;
  assoc.reserve(sweep.points.size());
  std::vector<TimedPoint> undistorted;

  auto plane_supported = [&](const PlaneFit& fit, const std::vector<Vec3>& nb) {
    if (cfg.plane_tolerance <= 0.0) return true;  // check disabled
    for (const Vec3& q : nb) {
      if (std::abs(fit.normal.dot(q) + fit.d) > cfg.plane_tolerance) {
        return false;  // neighborhood straddles more than one surface
      }
    }
    return true;
  };

  auto associate = [&](bool refresh_undistortion) {
    assoc.clear();
    thread_local std::vector<Vec3> nb;
    if (elastic) {
      const Pose pose_b = x_b.pose(), pose_e = x_e.pose();
      for (const TimedPoint& tp : sweep.points) {
        const double alpha = std::clamp((tp.time - sweep.t_begin) / span, 0.0, 1.0);
        const Vec3 p_imu = extrinsic * tp.position;
        const Vec3 pw = interpolate_pose(pose_b, pose_e, alpha) * p_imu;
        map.neighbors(pw, cfg.neighbor_count, nb);
        if (static_cast<int>(nb.size()) < cfg.min_plane_points) continue;
        const auto fit = fit_plane(nb, &pw);
        if (!fit || !plane_supported(*fit, nb)) continue;
        assoc.push_back({p_imu, alpha, *fit,
                         cfg.planarity_weights ? fit->planarity : 1.0});
      }
      return;
    }
    if (refresh_undistortion) {
      undistorted = cfg.undistort_with_imu
                        ? undistort_imu(sweep, imu_window, x_b, extrinsic, gravity)
                        : undistort_uniform(sweep, x_b, x_e, extrinsic);
    }
    const Pose pose_e = x_e.pose();
    for (const TimedPoint& tp : undistorted) {
      const Vec3 pw = pose_e * tp.position;
      map.neighbors(pw, cfg.neighbor_count, nb);
      if (static_cast<int>(nb.size()) < cfg.min_plane_points) continue;
      const auto fit = fit_plane(nb, &pw);
      if (!fit || !plane_supported(*fit, nb)) continue;
      assoc.push_back({tp.position, 1.0, *fit,
                       cfg.planarity_weights ? fit->planarity : 1.0});
    }
  };

  auto point_value = [&](const Association& a, const NavState& xb,
                         const NavState& xe) {
    if (!elastic) {
      return a.weight * (a.plane.normal.dot(xe.q * a.p + xe.t) + a.plane.d);
    }
    const Pose pose =
        interpolate_pose(xb.pose(), xe.pose(), a.alpha);
    return a.weight * (a.plane.normal.dot(pose * a.p) + a.plane.d);
  };

  auto eval_cost = [&](const NavState& xb, const NavState& xe, double* c_pt,
                       double* c_imu, double* c_log) {
    double pt = 0.0;
    for (const Association& a : assoc) {
      const double h = point_value(a, xb, xe) * inv_sqrt_pc;
      pt += huber_cost(h * h, cfg.huber_delta);
    }
    const Vec15 ri = sqrt_info * imu_residual(pre, xb, xe, gravity);
    const double imu = ri.squaredNorm();
    double lg = 0.0;
    if (tie_begin) {
      const Vec15 rl = logical_residual(xb, x_prev_end).residual;
      lg = rl.dot(logical_w.asDiagonal() * rl);
    }
    if (c_pt) *c_pt = pt;
    if (c_imu) *c_imu = imu;
    if (c_log) *c_log = lg;
    return pt + imu + lg;
  };

  auto assemble = [&](const NavState& xb, const NavState& xe, Mat30& H,
                      Vec30& g) {
    H.setZero();
    g.setZero();
    for (const Association& a : assoc) {
      if (elastic) {
        const ElasticPointResidual er =
            elastic_point_residual(a.p, a.alpha, a.plane, xb, xe, a.weight);
        const double h = er.value * inv_sqrt_pc;
        const double w = huber_weight(std::abs(h), cfg.huber_delta);
        Eigen::Matrix<double, 1, 12> Jw = er.jacobian * inv_sqrt_pc;
        // columns: begin (t, theta) -> 0..5, end (t, theta) -> 15..20
        const auto Jb = Jw.block<1, 6>(0, 0);
        const auto Je = Jw.block<1, 6>(0, 6);
        H.block<6, 6>(0, 0) += w * Jb.transpose() * Jb;
        H.block<6, 6>(0, 15) += w * Jb.transpose() * Je;
        H.block<6, 6>(15, 0) += w * Je.transpose() * Jb;
        H.block<6, 6>(15, 15) += w * Je.transpose() * Je;
        g.segment<6>(0) += w * Jb.transpose() * h;
        g.segment<6>(15) += w * Je.transpose() * h;
      } else {
        const PointResidual pr = point_residual(a.p, a.plane, xe, a.weight);
        const double h = pr.value * inv_sqrt_pc;
        const double w = huber_weight(std::abs(h), cfg.huber_delta);
        const Eigen::Matrix<double, 1, 6> Jw = pr.jacobian * inv_sqrt_pc;
        H.block<6, 6>(15, 15) += w * Jw.transpose() * Jw;
        g.segment<6>(15) += w * Jw.transpose() * h;
      }
    }
    const ImuResidualJacobian ir = imu_residual_jacobian(pre, xb, xe, gravity);
    const Eigen::Matrix<double, 15, 30> Jw = sqrt_info * ir.jacobian;
    const Vec15 rw = sqrt_info * ir.residual;
    H += Jw.transpose() * Jw;
    g += Jw.transpose() * rw;
    if (tie_begin) {
      const LogicalResidual lr = logical_residual(xb, x_prev_end);
      H.topLeftCorner<15, 15>() +=
          lr.jacobian.transpose() * logical_w.asDiagonal() * lr.jacobian;
      g.head<15>() +=
          lr.jacobian.transpose() * logical_w.asDiagonal() * lr.residual;
    }
  };

  SweepEstimate est;
  est.x_b = x_b;
  est.x_e = x_e;

  Mat30 H;
  Vec30 g;
  for (int outer = 0; outer < cfg.max_outer_iterations; ++outer) {
    const bool refresh =
        outer == 0 || (cfg.reundistort_each_iteration && !elastic);
    associate(refresh);
    if (static_cast<int>(assoc.size()) < cfg.min_associations) {
      est.x_b = prediction.x_b;
      est.x_e = prediction.x_e;
      est.degenerate = true;
      est.converged = false;
      est.point_residuals = static_cast<int>(assoc.size());
      est.final_cost = eval_cost(est.x_b, est.x_e, &est.cost_point,
                                 &est.cost_imu, &est.cost_logical);
      return est;
    }
    est.outer_iterations = outer + 1;
    est.point_residuals = static_cast<int>(assoc.size());

    const NavState before_b = x_b, before_e = x_e;
    double cost = eval_cost(x_b, x_e, nullptr, nullptr, nullptr);
    if (!std::isfinite(cost)) {
      throw NumericalError("optimize_sweep: non-finite cost");
    }
    const double round_start_cost = cost;
    est.cost_rounds.emplace_back();
    est.cost_rounds.back().push_back(cost);
    assemble(x_b, x_e, H, g);

    double lambda = 1e-4;
    bool inner_converged = false;
    for (int inner = 0; inner < cfg.max_inner_iterations; ++inner) {
      Vec30 delta = Vec30::Zero();
      if (frozen_begin) {
        Eigen::Matrix<double, 15, 15> Hd = H.bottomRightCorner<15, 15>();
        for (int i = 0; i < 15; ++i) {
          Hd(i, i) += lambda * std::max(Hd(i, i), 1e-12);
        }
        delta.tail<15>() = Hd.ldlt().solve(-g.tail<15>());
      } else {
        Mat30 Hd = H;
        for (int i = 0; i < 30; ++i) {
          Hd(i, i) += lambda * std::max(Hd(i, i), 1e-12);
        }
        delta = Hd.ldlt().solve(-g);
      }
      if (!delta.allFinite()) {
        throw NumericalError("optimize_sweep: non-finite increment");
      }

      const NavState cand_b =
          frozen_begin ? x_b : boxplus(x_b, delta.head<15>());
      const NavState cand_e = boxplus(x_e, delta.tail<15>());
      const double cand_cost = eval_cost(cand_b, cand_e, nullptr, nullptr, nullptr);

      if (cand_cost <= cost) {
        x_b = cand_b;
        x_e = cand_e;
        cost = cand_cost;
        est.cost_rounds.back().push_back(cost);
        ++est.accepted_steps;
        est.final_step_norm = delta.norm();
        lambda = std::max(lambda / 3.0, 1e-12);
        if (est.final_step_norm < cfg.tolerance) {
          inner_converged = true;
          break;
        }
        assemble(x_b, x_e, H, g);
      } else {
        lambda *= 10.0;
        if (lambda > 1e10) break;
      }
    }

    Vec30 outer_step;
    outer_step.head<15>() = boxminus(x_b, before_b);
    outer_step.tail<15>() = boxminus(x_e, before_e);
    const double improvement = round_start_cost - cost;
    if (inner_converged || outer_step.norm() < cfg.tolerance ||
        improvement <= cfg.cost_plateau * std::max(round_start_cost, 1e-12)) {
      est.converged = true;
      break;
    }
  }

  est.x_b = x_b;
  est.x_e = x_e;
  est.final_cost =
      eval_cost(x_b, x_e, &est.cost_point, &est.cost_imu, &est.cost_logical);
  return est;
}

}  // namespace selio
