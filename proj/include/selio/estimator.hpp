#pragma once

#include <span>
#include <vector>

#include "selio/geometry.hpp"
#include "selio/imu_preintegration.hpp"
#include "selio/preprocessing.hpp"
#include "selio/voxel_map.hpp"

namespace selio {

/// How the sweep begin state is coupled to the previous end state.
///  - kTraditional: x_b frozen at the previous end state, only x_e optimized.
///  - kElastic: per-point interpolated poses tie the scan to both states.
///  - kSemiElastic: points constrain x_e only; a soft equality residual pulls
///    x_b toward the previous end state while pre-integration couples the pair.
enum class Mode { kTraditional, kElastic, kSemiElastic };

struct EstimatorConfig {
  Mode mode = Mode::kSemiElastic;
  int max_outer_iterations = 30;  // undistort + associate rounds
  int max_inner_iterations = 10;  // damped Gauss-Newton steps per round
  double tolerance = 1e-6;        // increment norm convergence threshold
  double cost_plateau = 1e-3;     // relative per-round improvement below
                                  // which the solve counts as converged
  double huber_delta = 0.1;       // on whitened point residuals
  double point_cov = 1e-4;        // isotropic point-to-plane covariance
  // The logical residual weight matrix is block-diagonal; each block is a
  // scaled identity and `logical_weight` multiplies all of them.  The begin
  // pose is tied tightly (the previous end pose was scan-corrected), while
  // velocity stays loose so the pre-integration terms can pull it to the
  // value implied by consecutive scan-corrected positions.
  double logical_weight = 1.0;
  double logical_weight_position = 30.0;
  double logical_weight_rotation = 30.0;
  double logical_weight_velocity = 1.0;
  double logical_weight_bias = 1e4;
  bool planarity_weights = true;  // neighborhood planarity as omega_p
  int neighbor_count = 20;
  int min_plane_points = 5;
  double plane_tolerance = 0.0;   // max neighbor-to-plane distance [m];
                                  // rejects fits straddling two surfaces;
                                  // <= 0 disables the check
  int min_associations = 10;      // below this: prediction-only fallback
  bool undistort_with_imu = true;   // uniform interpolation otherwise
  bool reundistort_each_iteration = true;
};

struct Prediction {
  NavState x_b;
  NavState x_e;
};

/// Propagates the previous end state over the IMU window with the midpoint
/// rule.  x_b is the previous end state unchanged (fields bit-identical);
/// biases are carried into x_e.
Prediction predict(const NavState& x_prev_end,
                   std::span<const ImuSample> window, const Vec3& gravity);

struct PointResidual {
  double value = 0.0;
  Eigen::Matrix<double, 1, 6> jacobian;  // d/d(dt_e, dtheta_e)
};

/// Weighted point-to-plane distance of a point already expressed in the
/// end-of-sweep IMU frame, projected to world with x_e.
PointResidual point_residual(const Vec3& p_end_frame, const PlaneFit& plane,
                             const NavState& x_e, double weight);

struct ElasticPointResidual {
  double value = 0.0;
  Eigen::Matrix<double, 1, 12> jacobian;  // d/d(dt_b, dth_b, dt_e, dth_e)
};

/// Continuous-time variant: the point (IMU frame at its own timestamp) is
/// projected with the pose interpolated between x_b and x_e at `alpha`.
ElasticPointResidual elastic_point_residual(const Vec3& p_imu_frame,
                                            double alpha, const PlaneFit& plane,
                                            const NavState& x_b,
                                            const NavState& x_e, double weight);

struct LogicalResidual {
  Vec15 residual;
  Mat15 jacobian;  // with respect to the x_b error state
};

/// Soft equality between x_b and the previous end state (which is constant).
LogicalResidual logical_residual(const NavState& x_b,
                                 const NavState& x_prev_end);

struct SweepEstimate {
  NavState x_b;
  NavState x_e;
  bool converged = false;
  bool degenerate = false;  // too few plane associations, states = prediction
  int outer_iterations = 0;
  int accepted_steps = 0;
  int point_residuals = 0;   // valid associations in the last round
  double final_cost = 0.0;
  double cost_point = 0.0;
  double cost_imu = 0.0;
  double cost_logical = 0.0;
  double final_step_norm = 0.0;
  // One entry per outer round: the cost when the round's associations were
  // frozen, followed by the cost after every accepted solver step.  Within a
  // round the sequence never increases; across rounds re-association may
  // lift it.
  std::vector<std::vector<double>> cost_rounds;
};

/// Robust damped Gauss-Newton over the stacked 30-dim error state (15-dim in
/// traditional mode).  Each outer iteration re-undistorts (configurable),
/// re-associates planes and solves to convergence on frozen associations.
/// The Huber kernel is applied per point residual; pre-integration and the
/// logical residual stay quadratic.  Gravity is held fixed.
SweepEstimate optimize_sweep(const Sweep& sweep, const VoxelMap& map,
                             const NavState& x_prev_end,
                             const Prediction& prediction,
                             const Preintegration& pre,
                             std::span<const ImuSample> imu_window,
                             const Pose& extrinsic, const Vec3& gravity,
                             const EstimatorConfig& cfg);

}  // namespace selio
