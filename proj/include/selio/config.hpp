#pragma once

#include <iosfwd>
#include <string>

#include "selio/estimator.hpp"
#include "selio/initialization.hpp"
#include "selio/simulator.hpp"

namespace selio {

// Every tunable of the pipeline and the simulator in one flat structure.
// Files use `key = value` lines; '#' starts a comment; unknown keys are
// rejected so typos fail loudly instead of silently using defaults.
struct RunConfig {
  // -- estimator -----------------------------------------------------------
  Mode mode = Mode::kSemiElastic;
  int max_outer_iterations = 30;
  int max_inner_iterations = 10;
  double tolerance = 1e-6;
  double cost_plateau = 1e-3;
  double huber_delta = 0.1;
  double point_cov = 1e-4;
  double logical_weight = 1.0;
  double logical_weight_position = 30.0;
  double logical_weight_rotation = 30.0;
  double logical_weight_velocity = 1.0;
  double logical_weight_bias = 1e4;
  bool planarity_weights = true;
  int neighbor_count = 20;
  int min_plane_points = 5;
  double plane_tolerance = 0.0;
  int min_associations = 10;
  bool undistort_with_imu = true;
  bool reundistort_each_iteration = true;

  // -- map -----------------------------------------------------------------
  double voxel_size = 1.0;
  int max_points_per_voxel = 20;
  double prune_distance = 500.0;
  int search_radius = 1;
  double min_point_spacing = 0.1;

  // -- sweep preprocessing -------------------------------------------------
  int downsample_step = 4;
  double downsample_voxel = 0.5;

  // -- IMU noise densities -------------------------------------------------
  double sigma_accel = 0.02;
  double sigma_gyro = 0.002;
  double sigma_accel_bias = 2e-4;
  double sigma_gyro_bias = 2e-5;

  // -- static initialization -----------------------------------------------
  double init_window = 2.0;
  double stationarity_threshold = 0.15;
  double gravity_norm = 9.81;

  // -- sensor extrinsic (lidar frame -> IMU frame) --------------------------
  Vec3 extrinsic_t = Vec3::Zero();
  Rotation extrinsic_q = Rotation::identity();

  // -- fault injection (disabled when inject_sweep < 0) ---------------------
  int inject_sweep = -1;
  Vec3 inject_offset = Vec3::Zero();

  uint64_t seed = 1;

  // -- simulator -------------------------------------------------------------
  TrajectoryKind sim_trajectory = TrajectoryKind::kCircle;
  double sim_duration = 30.0;
  double sim_lead = 2.0;
  double sim_ramp = 1.0;
  double sim_radius = 4.0;
  double sim_speed = 1.0;
  Vec3 sim_twist_linear = Vec3(1.0, 0.0, 0.0);
  Vec3 sim_twist_angular = Vec3::Zero();
  double sim_imu_rate = 200.0;
  double sim_sweep_rate = 10.0;
  int sim_rings = 16;
  int sim_columns = 720;
  double sim_elev_min_deg = -15.0;
  double sim_elev_max_deg = 15.0;
  double sim_min_range = 0.5;
  double sim_max_range = 60.0;
  double sim_range_sigma = 0.0;
  bool sim_noise = false;
  Vec3 sim_bias_accel = Vec3::Zero();
  Vec3 sim_bias_gyro = Vec3::Zero();
  bool sim_bias_walk = false;
};

// Reads `key = value` lines from a file. Throws DataError on unreadable
// files, unknown keys, or malformed values.
RunConfig load_config(const std::string& path);

// Applies one `key=value` assignment (e.g. a command-line override).
void apply_config_entry(RunConfig& config, const std::string& assignment);

// Parses from a stream; `source` names the origin for error messages.
RunConfig parse_config(std::istream& in, const std::string& source);

// Canonical dump: every key in declaration order with its current value.
// Round-trips through parse_config.
std::string dump_config(const RunConfig& config);

// Views of the flat structure as the per-module configurations.
EstimatorConfig estimator_config(const RunConfig& config);
MapConfig map_config(const RunConfig& config);
ImuNoiseModel noise_model(const RunConfig& config);
InitConfig init_config(const RunConfig& config);
Pose sensor_extrinsic(const RunConfig& config);
TrajectorySpec trajectory_spec(const RunConfig& config);
SimImuConfig sim_imu_config(const RunConfig& config);
SimLidarConfig sim_lidar_config(const RunConfig& config);

}  // namespace selio
