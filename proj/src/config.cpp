#include "selio/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "selio/errors.hpp"

namespace selio {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw DataError("config: bad value '" + value + "' for key '" + key + "'");
}

double to_double(const std::string& key, const std::string& value) {
  size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    bad_value(key, value);
  }
  if (used != value.size()) bad_value(key, value);
  return out;
}

long long to_integer(const std::string& key, const std::string& value) {
  size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(value, &used);
  } catch (const std::exception&) {
    bad_value(key, value);
  }
  if (used != value.size()) bad_value(key, value);
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value);
}

Vec3 to_vec3(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  Vec3 out;
  if (!(in >> out.x() >> out.y() >> out.z())) bad_value(key, value);
  std::string rest;
  if (in >> rest) bad_value(key, value);
  return out;
}

Rotation to_rotation(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  double w, x, y, z;
  if (!(in >> w >> x >> y >> z)) bad_value(key, value);
  std::string rest;
  if (in >> rest) bad_value(key, value);
  try {
    return Rotation::from_quaternion(w, x, y, z);
  } catch (const std::exception&) {
    bad_value(key, value);
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_vec3(const Vec3& v) {
  return format_double(v.x()) + " " + format_double(v.y()) + " " +
         format_double(v.z());
}

std::string format_rotation(const Rotation& q) {
  return format_double(q.w()) + " " + format_double(q.x()) + " " +
         format_double(q.y()) + " " + format_double(q.z());
}

struct Entry {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Entry make_entry(const char* key, T RunConfig::* member);

template <>
Entry make_entry<double>(const char* key, double RunConfig::* member) {
  return {key,
          [member, key](RunConfig& c, const std::string& v) {
            c.*member = to_double(key, v);
          },
          [member](const RunConfig& c) { return format_double(c.*member); }};
}

template <>
Entry make_entry<int>(const char* key, int RunConfig::* member) {
  return {key,
          [member, key](RunConfig& c, const std::string& v) {
            c.*member = static_cast<int>(to_integer(key, v));
          },
          [member](const RunConfig& c) { return std::to_string(c.*member); }};
}

template <>
Entry make_entry<uint64_t>(const char* key, uint64_t RunConfig::* member) {
  return {key,
          [member, key](RunConfig& c, const std::string& v) {
            const long long parsed = to_integer(key, v);
            if (parsed < 0) bad_value(key, v);
            c.*member = static_cast<uint64_t>(parsed);
          },
          [member](const RunConfig& c) { return std::to_string(c.*member); }};
}

template <>
Entry make_entry<bool>(const char* key, bool RunConfig::* member) {
  return {key,
          [member, key](RunConfig& c, const std::string& v) {
            c.*member = to_bool(key, v);
          },
          [member](const RunConfig& c) {
            return c.*member ? std::string("true") : std::string("false");
          }};
}

template <>
Entry make_entry<Vec3>(const char* key, Vec3 RunConfig::* member) {
  return {key,
          [member, key](RunConfig& c, const std::string& v) {
            c.*member = to_vec3(key, v);
          },
          [member](const RunConfig& c) { return format_vec3(c.*member); }};
}

template <>
Entry make_entry<Rotation>(const char* key, Rotation RunConfig::* member) {
  return {key,
          [member, key](RunConfig& c, const std::string& v) {
            c.*member = to_rotation(key, v);
          },
          [member](const RunConfig& c) { return format_rotation(c.*member); }};
}

template <>
Entry make_entry<Mode>(const char* key, Mode RunConfig::* member) {
  return {key,
          [member, key](RunConfig& c, const std::string& v) {
            if (v == "traditional") {
              c.*member = Mode::kTraditional;
            } else if (v == "elastic") {
              c.*member = Mode::kElastic;
            } else if (v == "semi_elastic") {
              c.*member = Mode::kSemiElastic;
            } else {
              bad_value(key, v);
            }
          },
          [member](const RunConfig& c) -> std::string {
            switch (c.*member) {
              case Mode::kTraditional: return "traditional";
              case Mode::kElastic: return "elastic";
              case Mode::kSemiElastic: return "semi_elastic";
            }
            return "semi_elastic";
          }};
}

template <>
Entry make_entry<TrajectoryKind>(const char* key,
                                 TrajectoryKind RunConfig::* member) {
  return {key,
          [member, key](RunConfig& c, const std::string& v) {
            if (v == "stationary") {
              c.*member = TrajectoryKind::kStationary;
            } else if (v == "circle") {
              c.*member = TrajectoryKind::kCircle;
            } else if (v == "figure8") {
              c.*member = TrajectoryKind::kFigureEight;
            } else if (v == "twist") {
              c.*member = TrajectoryKind::kConstantTwist;
            } else {
              bad_value(key, v);
            }
          },
          [member](const RunConfig& c) -> std::string {
            switch (c.*member) {
              case TrajectoryKind::kStationary: return "stationary";
              case TrajectoryKind::kCircle: return "circle";
              case TrajectoryKind::kFigureEight: return "figure8";
              case TrajectoryKind::kConstantTwist: return "twist";
            }
            return "circle";
          }};
}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = {
      make_entry("mode", &RunConfig::mode),
      make_entry("max_outer_iterations", &RunConfig::max_outer_iterations),
      make_entry("max_inner_iterations", &RunConfig::max_inner_iterations),
      make_entry("tolerance", &RunConfig::tolerance),
      make_entry("cost_plateau", &RunConfig::cost_plateau),
      make_entry("huber_delta", &RunConfig::huber_delta),
      make_entry("point_cov", &RunConfig::point_cov),
      make_entry("logical_weight", &RunConfig::logical_weight),
      make_entry("logical_weight_position", &RunConfig::logical_weight_position),
      make_entry("logical_weight_rotation", &RunConfig::logical_weight_rotation),
      make_entry("logical_weight_velocity", &RunConfig::logical_weight_velocity),
      make_entry("logical_weight_bias", &RunConfig::logical_weight_bias),
      make_entry("planarity_weights", &RunConfig::planarity_weights),
      make_entry("neighbor_count", &RunConfig::neighbor_count),
      make_entry("min_plane_points", &RunConfig::min_plane_points),
      make_entry("plane_tolerance", &RunConfig::plane_tolerance),
      make_entry("min_associations", &RunConfig::min_associations),
      make_entry("undistort_with_imu", &RunConfig::undistort_with_imu),
      make_entry("reundistort_each_iteration",
                 &RunConfig::reundistort_each_iteration),
      make_entry("voxel_size", &RunConfig::voxel_size),
      make_entry("max_points_per_voxel", &RunConfig::max_points_per_voxel),
      make_entry("prune_distance", &RunConfig::prune_distance),
      make_entry("search_radius", &RunConfig::search_radius),
      make_entry("min_point_spacing", &RunConfig::min_point_spacing),
      make_entry("downsample_step", &RunConfig::downsample_step),
      make_entry("downsample_voxel", &RunConfig::downsample_voxel),
      make_entry("sigma_accel", &RunConfig::sigma_accel),
      make_entry("sigma_gyro", &RunConfig::sigma_gyro),
      make_entry("sigma_accel_bias", &RunConfig::sigma_accel_bias),
      make_entry("sigma_gyro_bias", &RunConfig::sigma_gyro_bias),
      make_entry("init_window", &RunConfig::init_window),
      make_entry("stationarity_threshold", &RunConfig::stationarity_threshold),
      make_entry("gravity_norm", &RunConfig::gravity_norm),
      make_entry("extrinsic_t", &RunConfig::extrinsic_t),
      make_entry("extrinsic_q", &RunConfig::extrinsic_q),
      make_entry("inject_sweep", &RunConfig::inject_sweep),
      make_entry("inject_offset", &RunConfig::inject_offset),
      make_entry("seed", &RunConfig::seed),
      make_entry("sim_trajectory", &RunConfig::sim_trajectory),
      make_entry("sim_duration", &RunConfig::sim_duration),
      make_entry("sim_lead", &RunConfig::sim_lead),
      make_entry("sim_ramp", &RunConfig::sim_ramp),
      make_entry("sim_radius", &RunConfig::sim_radius),
      make_entry("sim_speed", &RunConfig::sim_speed),
      make_entry("sim_twist_linear", &RunConfig::sim_twist_linear),
      make_entry("sim_twist_angular", &RunConfig::sim_twist_angular),
      make_entry("sim_imu_rate", &RunConfig::sim_imu_rate),
      make_entry("sim_sweep_rate", &RunConfig::sim_sweep_rate),
      make_entry("sim_rings", &RunConfig::sim_rings),
      make_entry("sim_columns", &RunConfig::sim_columns),
      make_entry("sim_elev_min_deg", &RunConfig::sim_elev_min_deg),
      make_entry("sim_elev_max_deg", &RunConfig::sim_elev_max_deg),
      make_entry("sim_min_range", &RunConfig::sim_min_range),
      make_entry("sim_max_range", &RunConfig::sim_max_range),
      make_entry("sim_range_sigma", &RunConfig::sim_range_sigma),
      make_entry("sim_noise", &RunConfig::sim_noise),
      make_entry("sim_bias_accel", &RunConfig::sim_bias_accel),
      make_entry("sim_bias_gyro", &RunConfig::sim_bias_gyro),
      make_entry("sim_bias_walk", &RunConfig::sim_bias_walk),
  };
  return entries;
}

void apply_assignment(RunConfig& config, const std::string& key,
                      const std::string& value, const std::string& where) {
  for (const Entry& entry : registry()) {
    if (entry.key == key) {
      entry.set(config, value);
      return;
    }
  }
  throw DataError("config: unknown key '" + key + "' (" + where + ")");
}

}  // namespace

RunConfig parse_config(std::istream& in, const std::string& source) {
  RunConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    const std::string where = source + ":" + std::to_string(line_no);
    if (eq == std::string::npos) {
      throw DataError("config: expected 'key = value' (" + where + ")");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw DataError("config: expected 'key = value' (" + where + ")");
    }
    apply_assignment(config, key, value, where);
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("config: cannot open '" + path + "'");
  return parse_config(in, path);
}

void apply_config_entry(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw DataError("config: expected key=value, got '" + assignment + "'");
  }
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  if (key.empty() || value.empty()) {
    throw DataError("config: expected key=value, got '" + assignment + "'");
  }
  apply_assignment(config, key, value, "override");
}

std::string dump_config(const RunConfig& config) {
  std::string out;
  for (const Entry& entry : registry()) {
    out += entry.key;
    out += " = ";
    out += entry.get(config);
    out += "\n";
  }
  return out;
}

EstimatorConfig estimator_config(const RunConfig& config) {
  EstimatorConfig out;
  out.mode = config.mode;
  out.max_outer_iterations = config.max_outer_iterations;
  out.max_inner_iterations = config.max_inner_iterations;
  out.tolerance = config.tolerance;
  out.cost_plateau = config.cost_plateau;
  out.huber_delta = config.huber_delta;
  out.point_cov = config.point_cov;
  out.logical_weight = config.logical_weight;
  out.logical_weight_position = config.logical_weight_position;
  out.logical_weight_rotation = config.logical_weight_rotation;
  out.logical_weight_velocity = config.logical_weight_velocity;
  out.logical_weight_bias = config.logical_weight_bias;
  out.planarity_weights = config.planarity_weights;
  out.neighbor_count = config.neighbor_count;
  out.min_plane_points = config.min_plane_points;
  out.plane_tolerance = config.plane_tolerance;
  out.min_associations = config.min_associations;
  out.undistort_with_imu = config.undistort_with_imu;
  out.reundistort_each_iteration = config.reundistort_each_iteration;
  return out;
}

MapConfig map_config(const RunConfig& config) {
  MapConfig out;
  out.voxel_size = config.voxel_size;
  out.max_points_per_voxel = config.max_points_per_voxel;
  out.prune_distance = config.prune_distance;
  out.search_radius = config.search_radius;
  out.min_point_spacing = config.min_point_spacing;
  return out;
}

ImuNoiseModel noise_model(const RunConfig& config) {
  ImuNoiseModel out;
  out.sigma_accel = config.sigma_accel;
  out.sigma_gyro = config.sigma_gyro;
  out.sigma_accel_bias = config.sigma_accel_bias;
  out.sigma_gyro_bias = config.sigma_gyro_bias;
  return out;
}

InitConfig init_config(const RunConfig& config) {
  InitConfig out;
  out.window = config.init_window;
  out.stationarity_threshold = config.stationarity_threshold;
  out.gravity_norm = config.gravity_norm;
  return out;
}

Pose sensor_extrinsic(const RunConfig& config) {
  return Pose{config.extrinsic_q, config.extrinsic_t};
}

TrajectorySpec trajectory_spec(const RunConfig& config) {
  TrajectorySpec out;
  out.kind = config.sim_trajectory;
  out.duration = config.sim_duration;
  out.lead = config.sim_lead;
  out.ramp = config.sim_ramp;
  out.radius = config.sim_radius;
  out.speed = config.sim_speed;
  out.twist_linear = config.sim_twist_linear;
  out.twist_angular = config.sim_twist_angular;
  return out;
}

SimImuConfig sim_imu_config(const RunConfig& config) {
  SimImuConfig out;
  out.rate = config.sim_imu_rate;
  out.gravity_norm = config.gravity_norm;
  out.noise = config.sim_noise;
  out.model = noise_model(config);
  out.bias_accel = config.sim_bias_accel;
  out.bias_gyro = config.sim_bias_gyro;
  out.bias_walk = config.sim_bias_walk;
  out.seed = config.seed;
  return out;
}

SimLidarConfig sim_lidar_config(const RunConfig& config) {
  SimLidarConfig out;
  out.sweep_rate = config.sim_sweep_rate;
  out.rings = config.sim_rings;
  out.columns = config.sim_columns;
  out.elev_min_deg = config.sim_elev_min_deg;
  out.elev_max_deg = config.sim_elev_max_deg;
  out.min_range = config.sim_min_range;
  out.max_range = config.sim_max_range;
  out.range_sigma = config.sim_range_sigma;
  out.extrinsic = sensor_extrinsic(config);
  out.seed = config.seed;
  return out;
}

}  // namespace selio
