#include "selio/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "selio/errors.hpp"
#include "selio/preprocessing.hpp"

namespace selio {
namespace {

constexpr double kTimeEps = 1e-12;

ImuSample lerp_sample(const ImuSample& a, const ImuSample& b, double t) {
  const double alpha = (t - a.time) / (b.time - a.time);
  ImuSample out;
  out.time = t;
  out.accel = (1.0 - alpha) * a.accel + alpha * b.accel;
  out.gyro = (1.0 - alpha) * a.gyro + alpha * b.gyro;
  return out;
}

Sweep downsampled(const Sweep& sweep, const RunConfig& config) {
  Sweep out;
  out.t_begin = sweep.t_begin;
  out.t_end = sweep.t_end;
  out.index = sweep.index;
  const std::vector<TimedPoint> kept =
      quantitative_downsample(sweep.points, config.downsample_step);
  out.points = voxel_downsample(kept, config.downsample_voxel);
  return out;
}

}  // namespace

std::vector<ImuSample> extract_imu_window(std::span<const ImuSample> imu,
                                          double t_begin, double t_end) {
  if (t_end <= t_begin) {
    throw DataError("imu window: end time not after begin time");
  }
  auto first_after = std::upper_bound(
      imu.begin(), imu.end(), t_begin,
      [](double t, const ImuSample& s) { return t < s.time; });
  if (first_after == imu.begin()) {
    throw DataError("imu window: stream starts after the sweep begins");
  }

  std::vector<ImuSample> out;
  const ImuSample& before = *(first_after - 1);
  if (std::abs(before.time - t_begin) <= kTimeEps) {
    out.push_back(before);
    out.back().time = t_begin;
  } else {
    if (first_after == imu.end()) {
      throw DataError("imu window: stream ends before the sweep begins");
    }
    out.push_back(lerp_sample(before, *first_after, t_begin));
  }

  for (auto it = first_after; it != imu.end() && it->time < t_end - kTimeEps;
       ++it) {
    out.push_back(*it);
  }

  auto at_or_after_end = std::lower_bound(
      imu.begin(), imu.end(), t_end - kTimeEps,
      [](const ImuSample& s, double t) { return s.time < t; });
  if (at_or_after_end == imu.end()) {
    throw DataError("imu window: stream ends before the sweep ends");
  }
  if (std::abs(at_or_after_end->time - t_end) <= kTimeEps) {
    out.push_back(*at_or_after_end);
    out.back().time = t_end;
  } else {
    if (at_or_after_end == imu.begin()) {
      throw DataError("imu window: stream starts after the sweep ends");
    }
    out.push_back(lerp_sample(*(at_or_after_end - 1), *at_or_after_end, t_end));
  }
  if (out.size() < 2) {
    throw DataError("imu window: fewer than two samples over the sweep");
  }
  return out;
}

PipelineResult run_odometry(const Dataset& dataset, const RunConfig& config) {
  if (dataset.imu.size() < 2) {
    throw DataError("run: need at least two IMU samples");
  }
  if (dataset.sweeps.empty()) {
    throw DataError("run: need at least one sweep");
  }

  PipelineResult result;
  result.init = static_init(dataset.imu, init_config(config));
  const Vec3 gravity = result.init.g_w;
  const Pose extrinsic = sensor_extrinsic(config);
  const EstimatorConfig est_cfg = estimator_config(config);
  const ImuNoiseModel noise = noise_model(config);

  VoxelMap map(map_config(config));
  NavState x = result.init.state;
  const double init_until = dataset.imu.front().time + config.init_window;

  for (const Sweep& sweep : dataset.sweeps) {
    DiagnosticsRow diag;
    diag.sweep = sweep.index;
    diag.t_end = sweep.t_end;

    const bool init_phase = sweep.t_end <= init_until + kTimeEps;
    NavState x_begin;
    if (init_phase) {
      // The platform is treated as stationary here; points go into the map
      // at the initial pose and the state is carried forward unchanged.
      const Sweep ds = downsampled(sweep, config);
      std::vector<Vec3> world;
      world.reserve(ds.points.size());
      const Pose pose = x.pose();
      for (const TimedPoint& p : ds.points) {
        world.push_back(pose * (extrinsic * p.position));
      }
      map.insert(world);
      x_begin = x;
      x_begin.time = sweep.t_begin;
      x.time = sweep.t_end;
      diag.converged = true;
    } else {
      x.time = sweep.t_begin;
      const std::vector<ImuSample> window =
          extract_imu_window(dataset.imu, sweep.t_begin, sweep.t_end);
      const Prediction prediction = predict(x, window, gravity);
      const Preintegration pre = integrate(window, x.ba, x.bw, noise);
      const Sweep ds = downsampled(sweep, config);

      const auto t0 = std::chrono::steady_clock::now();
      const SweepEstimate est = optimize_sweep(
          ds, map, x, prediction, pre, window, extrinsic, gravity, est_cfg);
      const auto t1 = std::chrono::steady_clock::now();

      diag.converged = est.converged;
      diag.degenerate = est.degenerate;
      diag.outer_iterations = est.outer_iterations;
      diag.accepted_steps = est.accepted_steps;
      diag.point_residuals = est.point_residuals;
      diag.final_cost = est.final_cost;
      diag.cost_point = est.cost_point;
      diag.cost_imu = est.cost_imu;
      diag.cost_logical = est.cost_logical;
      diag.step_norm = est.final_step_norm;
      diag.solve_seconds =
          std::chrono::duration<double>(t1 - t0).count();

      const std::vector<TimedPoint> undistorted =
          est_cfg.undistort_with_imu
              ? undistort_imu(ds, window, est.x_b, extrinsic, gravity)
              : undistort_uniform(ds, est.x_b, est.x_e, extrinsic);
      std::vector<Vec3> world;
      world.reserve(undistorted.size());
      const Pose pose_e = est.x_e.pose();
      for (const TimedPoint& p : undistorted) {
        world.push_back(pose_e * p.position);
      }
      map.insert(world);
      map.prune(est.x_e.t);

      x_begin = est.x_b;
      x = est.x_e;
      ++result.optimized_sweeps;
      if (est.degenerate) ++result.degenerate_sweeps;
    }

    if (sweep.index == config.inject_sweep) {
      x.t += config.inject_offset;
    }

    if (!(x.t.allFinite() && x.v.allFinite())) {
      throw NumericalError("run: non-finite state at sweep " +
                           std::to_string(sweep.index));
    }

    result.states.push_back({sweep.index, 0, x_begin});
    result.states.push_back({sweep.index, 1, x});
    // The begin state solved this sweep describes the same instant as the
    // previous end state but has seen one more sweep of evidence, so it
    // supersedes that entry in the trajectory.  With a frozen begin state the
    // replacement is bit-identical and the trajectory is unchanged.
    const TrajectorySample begin_sample{x_begin.time, x_begin.t, x_begin.q};
    if (!result.trajectory.empty() &&
        std::abs(result.trajectory.back().time - begin_sample.time) < 1e-9) {
      result.trajectory.back() = begin_sample;
    } else if (result.trajectory.empty() ||
               begin_sample.time > result.trajectory.back().time) {
      result.trajectory.push_back(begin_sample);
    }
    result.trajectory.push_back({x.time, x.t, x.q});
    result.diagnostics.push_back(diag);
  }

  result.map_points = map.point_count();
  result.map_voxels = map.voxel_count();
  return result;
}

}  // namespace selio
