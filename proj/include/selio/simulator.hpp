#pragma once

#include <cstdint>
#include <vector>

#include "selio/geometry.hpp"
#include "selio/imu_types.hpp"
#include "selio/preprocessing.hpp"

namespace selio {

/// Finite rectangular patch of the plane normal . (x - center) == 0.
struct BoundedPlane {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Vec3 u_axis = Vec3::UnitX();
  Vec3 v_axis = Vec3::UnitY();
  double half_u = 1.0;
  double half_v = 1.0;
};

struct WorldModel {
  std::vector<BoundedPlane> planes;

  /// 20 m box room (floor -2, ceiling +8) with two interior wall segments.
  static WorldModel default_room();
};

enum class TrajectoryKind { kStationary, kConstantTwist, kCircle, kFigureEight };

/// Twice-differentiable analytic trajectories.  Circle and figure-eight hold
/// still for `lead` seconds, then ramp the traversal rate linearly over
/// `ramp` seconds; the constant twist moves from t == 0.
struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::kCircle;
  double duration = 30.0;  // [s]
  double lead = 2.0;       // stationary lead-in [s]
  double ramp = 1.0;       // rate ramp [s]
  double radius = 4.0;     // circle radius [m]
  double speed = 1.0;      // cruise speed [m/s]
  Vec3 twist_linear = Vec3::Zero();   // constant-twist body velocity
  Vec3 twist_angular = Vec3::Zero();  // constant-twist body rate
};

struct ExactState {
  NavState state;   // pose and world velocity (biases zero)
  Vec3 accel_world = Vec3::Zero();
  Vec3 gyro_body = Vec3::Zero();
};

/// Analytic state at time t; throws std::invalid_argument outside
/// [0, duration].
ExactState exact_state(const TrajectorySpec& traj, double t);

struct SimImuConfig {
  double rate = 200.0;  // [Hz]
  double gravity_norm = 9.81;
  bool noise = false;
  ImuNoiseModel model;
  Vec3 bias_accel = Vec3::Zero();  // initial biases
  Vec3 bias_gyro = Vec3::Zero();
  bool bias_walk = false;
  uint64_t seed = 1;
};

/// Samples the trajectory at the configured rate.  Specific force follows
/// a_hat = R_w^t (a_w + g_w) + b_a + n_a with g_w = (0, 0, gravity_norm), so a
/// resting, level, unbiased sensor reads (0, 0, gravity_norm).
std::vector<ImuSample> gen_imu(const TrajectorySpec& traj,
                               const SimImuConfig& config);

struct SimLidarConfig {
  double sweep_rate = 10.0;  // [Hz]
  int rings = 16;
  int columns = 720;
  double elev_min_deg = -15.0;
  double elev_max_deg = 15.0;
  double min_range = 0.5;   // [m]
  double max_range = 60.0;  // [m]
  double range_sigma = 0.0; // per-ray range noise [m]
  Pose extrinsic;           // sensor -> IMU
  uint64_t seed = 1;
};

/// Ray-casts one spinning-sensor sweep: azimuth advances 0..2pi over the
/// sweep interval, all rings of a column share the column timestamp.  Points
/// are in the sensor frame.  Rays that miss every plane are dropped.  The
/// noise stream is derived from (seed, sweep_index), so sweeps can be
/// generated in any order.
Sweep gen_sweep(const WorldModel& world, const TrajectorySpec& traj,
                const SimLidarConfig& config, int sweep_index);

}  // namespace selio
