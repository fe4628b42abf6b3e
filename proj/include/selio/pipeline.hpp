#pragma once

#include <span>
#include <vector>

#include "selio/config.hpp"
#include "selio/dataset_io.hpp"
#include "selio/estimator.hpp"
#include "selio/initialization.hpp"
#include "selio/voxel_map.hpp"

namespace selio {

// Everything the odometry run produces: one navigation state per sweep
// (evaluated at the sweep's end time), the matching pose trajectory, and a
// per-sweep optimizer report.
struct PipelineResult {
  InitResult init;
  std::vector<StateRow> states;
  std::vector<DiagnosticsRow> diagnostics;
  Trajectory trajectory;
  int optimized_sweeps = 0;
  int degenerate_sweeps = 0;
  size_t map_points = 0;
  size_t map_voxels = 0;
};

// Extracts the IMU samples covering [t_begin, t_end], synthesizing exact
// boundary samples by linear interpolation so the window spans the sweep
// precisely. Throws DataError when the IMU stream does not cover the span.
std::vector<ImuSample> extract_imu_window(std::span<const ImuSample> imu,
                                          double t_begin, double t_end);

// Runs the full pipeline: static initialization on the leading stationary
// data, then per-sweep predict / pre-integrate / optimize / map update.
// Sweeps that end inside the initialization window are registered at the
// initial pose. Throws DataError on unusable input and NumericalError when
// the optimizer fails irrecoverably.
PipelineResult run_odometry(const Dataset& dataset, const RunConfig& config);

}  // namespace selio
