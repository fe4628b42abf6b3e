#include "selio/simulator.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace selio {

namespace {

constexpr double kDeg = M_PI / 180.0;

// Traversal phase with a stationary lead and a linear rate ramp; C1 in the
// phase, so velocity is continuous and acceleration stays bounded.
struct Phase {
  double value = 0.0;  // integral of rate
  double rate = 0.0;
  double rate_dot = 0.0;
};

Phase eval_phase(double t, double lead, double ramp, double max_rate) {
  Phase p;
  const double tm = t - lead;
  if (tm <= 0.0) return p;
  if (ramp > 0.0 && tm < ramp) {
    p.rate_dot = max_rate / ramp;
    p.rate = p.rate_dot * tm;
    p.value = 0.5 * p.rate_dot * tm * tm;
  } else {
    p.rate = max_rate;
    p.value = max_rate * (tm - 0.5 * ramp);
  }
  return p;
}

Rotation yaw_rotation(double yaw) {
  return Rotation::exp(Vec3(0.0, 0.0, yaw));
}

ExactState circle_state(const TrajectorySpec& traj, double t) {
  const double w_max = traj.speed / traj.radius;
  const Phase ph = eval_phase(t, traj.lead, traj.ramp, w_max);
  const double c = std::cos(ph.value), s = std::sin(ph.value);
  const double r = traj.radius;

  ExactState out;
  out.state.t = Vec3(r * s, r * (1.0 - c), 0.0);
  out.state.v = r * ph.rate * Vec3(c, s, 0.0);
  out.accel_world =
      r * ph.rate_dot * Vec3(c, s, 0.0) + r * ph.rate * ph.rate * Vec3(-s, c, 0.0);
  out.state.q = yaw_rotation(ph.value);
  out.gyro_body = Vec3(0.0, 0.0, ph.rate);
  return out;
}

ExactState figure_eight_state(const TrajectorySpec& traj, double t) {
  const double A = traj.radius;        // x amplitude
  const double B = 0.625 * traj.radius;  // y lobe amplitude
  const double u_max = traj.speed / A;
  const Phase ph = eval_phase(t, traj.lead, traj.ramp, u_max);
  const double u = ph.value;

  const Vec3 P(A * std::sin(u), 0.5 * B * std::sin(2.0 * u), 0.0);
  const Vec3 Pu(A * std::cos(u), B * std::cos(2.0 * u), 0.0);
  const Vec3 Puu(-A * std::sin(u), -2.0 * B * std::sin(2.0 * u), 0.0);

  ExactState out;
  out.state.t = P;
  out.state.v = Pu * ph.rate;
  out.accel_world = Puu * ph.rate * ph.rate + Pu * ph.rate_dot;

  // Heading follows the curve tangent; its u-derivative is the planar
  // curvature formula, so the yaw rate vanishes with the traversal rate.
  const double heading = std::atan2(Pu.y(), Pu.x());
  const double h_u =
      (Pu.x() * Puu.y() - Pu.y() * Puu.x()) / Pu.head<2>().squaredNorm();
  out.state.q = yaw_rotation(heading);
  out.gyro_body = Vec3(0.0, 0.0, h_u * ph.rate);
  return out;
}

ExactState constant_twist_state(const TrajectorySpec& traj, double t) {
  const Vec3 w = traj.twist_angular;
  const Vec3 v = traj.twist_linear;
  const double wn = w.norm();

  ExactState out;
  out.state.q = Rotation::exp(w * t);
  if (wn < 1e-12) {
    out.state.t = v * t;
    out.state.v = v;
    out.accel_world = Vec3::Zero();
  } else {
    const Mat3 wx = skew(w);
    const double th = wn * t;
    // integral of Exp(w s) over [0, t]
    const Mat3 A = t * Mat3::Identity() + ((1.0 - std::cos(th)) / (wn * wn)) * wx +
                   ((t - std::sin(th) / wn) / (wn * wn)) * wx * wx;
    out.state.t = A * v;
    out.state.v = out.state.q * v;
    out.accel_world = out.state.q * w.cross(v);
  }
  out.gyro_body = w;
  return out;
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

WorldModel WorldModel::default_room() {
  const Vec3 x = Vec3::UnitX(), y = Vec3::UnitY(), z = Vec3::UnitZ();
  WorldModel w;
  w.planes.push_back({{0, 0, -2}, z, x, y, 10.0, 10.0});   // floor
  w.planes.push_back({{0, 0, 8}, z, x, y, 10.0, 10.0});    // ceiling
  w.planes.push_back({{-10, 0, 3}, x, y, z, 10.0, 5.0});
  w.planes.push_back({{10, 0, 3}, x, y, z, 10.0, 5.0});
  w.planes.push_back({{0, -10, 3}, y, x, z, 10.0, 5.0});
  w.planes.push_back({{0, 10, 3}, y, x, z, 10.0, 5.0});
  w.planes.push_back({{5, -4, 3}, x, y, z, 6.0, 5.0});     // interior, x = 5
  w.planes.push_back({{7.5, 5, 3}, y, x, z, 2.5, 5.0});    // interior, y = 5
  return w;
}

ExactState exact_state(const TrajectorySpec& traj, double t) {
  // Snap away rounding noise from accumulated-boundary arithmetic.
  constexpr double kBoundaryTol = 1e-9;
  if (t < 0.0 && t >= -kBoundaryTol) t = 0.0;
  if (t > traj.duration && t <= traj.duration + kBoundaryTol) {
    t = traj.duration;
  }
  if (!(t >= 0.0 && t <= traj.duration)) {
    throw std::invalid_argument("exact_state: time outside [0, duration]");
  }
  ExactState out;
  switch (traj.kind) {
    case TrajectoryKind::kStationary:
      break;
    case TrajectoryKind::kConstantTwist:
      out = constant_twist_state(traj, t);
      break;
    case TrajectoryKind::kCircle:
      out = circle_state(traj, t);
      break;
    case TrajectoryKind::kFigureEight:
      out = figure_eight_state(traj, t);
      break;
  }
  out.state.time = t;
  return out;
}

std::vector<ImuSample> gen_imu(const TrajectorySpec& traj,
                               const SimImuConfig& config) {
  if (!(config.rate > 0.0)) {
    throw std::invalid_argument("gen_imu: rate must be positive");
  }
  const double dt = 1.0 / config.rate;
  const int count = static_cast<int>(std::floor(traj.duration * config.rate)) + 1;
  const Vec3 g_w(0.0, 0.0, config.gravity_norm);

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double white_acc = config.model.sigma_accel * std::sqrt(config.rate);
  const double white_gyr = config.model.sigma_gyro * std::sqrt(config.rate);
  const double walk_acc = config.model.sigma_accel_bias * std::sqrt(dt);
  const double walk_gyr = config.model.sigma_gyro_bias * std::sqrt(dt);

  Vec3 ba = config.bias_accel;
  Vec3 bw = config.bias_gyro;

  std::vector<ImuSample> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    const double t = std::min(k * dt, traj.duration);
    const ExactState ex = exact_state(traj, t);
    const Rotation world_to_body = ex.state.q.inverse();

    ImuSample s;
    s.time = t;
    s.accel = world_to_body * (ex.accel_world + g_w) + ba;
    s.gyro = ex.gyro_body + bw;
    if (config.noise) {
      s.accel += white_acc * Vec3(gauss(rng), gauss(rng), gauss(rng));
      s.gyro += white_gyr * Vec3(gauss(rng), gauss(rng), gauss(rng));
    }
    if (config.bias_walk) {
      ba += walk_acc * Vec3(gauss(rng), gauss(rng), gauss(rng));
      bw += walk_gyr * Vec3(gauss(rng), gauss(rng), gauss(rng));
    }
    out.push_back(s);
  }
  return out;
}

Sweep gen_sweep(const WorldModel& world, const TrajectorySpec& traj,
                const SimLidarConfig& config, int sweep_index) {
  if (sweep_index < 0 || config.rings < 1 || config.columns < 1) {
    throw std::invalid_argument("gen_sweep: bad arguments");
  }
  const double period = 1.0 / config.sweep_rate;
  Sweep sweep;
  sweep.index = sweep_index;
  sweep.t_begin = sweep_index * period;
  sweep.t_end = sweep.t_begin + period;
  if (sweep.t_end > traj.duration + 1e-9) {
    throw std::invalid_argument("gen_sweep: sweep extends past the trajectory");
  }

  std::mt19937_64 rng(splitmix64(config.seed ^ splitmix64(sweep_index + 1)));
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double elev_lo = config.elev_min_deg * kDeg;
  const double elev_hi = config.elev_max_deg * kDeg;
  const double elev_step =
      config.rings > 1 ? (elev_hi - elev_lo) / (config.rings - 1) : 0.0;

  sweep.points.reserve(static_cast<size_t>(config.rings) * config.columns);
  for (int j = 0; j < config.columns; ++j) {
    const double t =
        sweep.t_begin + period * (static_cast<double>(j) / config.columns);
    const double azimuth = 2.0 * M_PI * static_cast<double>(j) / config.columns;
    const ExactState ex = exact_state(traj, t);
    const Pose sensor_pose = ex.state.pose() * config.extrinsic;
    const Vec3 origin = sensor_pose.translation;
    const Mat3 R = sensor_pose.rotation.matrix();

    for (int i = 0; i < config.rings; ++i) {
      const double elev = elev_lo + i * elev_step;
      const Vec3 dir_sensor(std::cos(elev) * std::cos(azimuth),
                            std::cos(elev) * std::sin(azimuth), std::sin(elev));
      const Vec3 dir = R * dir_sensor;

      double best = config.max_range + 1.0;
      for (const BoundedPlane& plane : world.planes) {
        const double denom = plane.normal.dot(dir);
        if (std::abs(denom) < 1e-12) continue;
        const double tau = plane.normal.dot(plane.center - origin) / denom;
        if (tau < config.min_range || tau > config.max_range || tau >= best) {
          continue;
        }
        const Vec3 rel = origin + tau * dir - plane.center;
        if (std::abs(rel.dot(plane.u_axis)) <= plane.half_u &&
            std::abs(rel.dot(plane.v_axis)) <= plane.half_v) {
          best = tau;
        }
      }
      if (best > config.max_range) continue;
      if (config.range_sigma > 0.0) best += config.range_sigma * gauss(rng);
      sweep.points.push_back({best * dir_sensor, t});
    }
  }
  return sweep;
}

}  // namespace selio
