#pragma once

#include <span>
#include <string>
#include <vector>

#include "selio/evaluation.hpp"
#include "selio/geometry.hpp"
#include "selio/imu_types.hpp"
#include "selio/preprocessing.hpp"

namespace selio {

// On-disk dataset layout, rooted at a directory:
//   imu.csv          header "t,ax,ay,az,gx,gy,gz", one sample per row
//   sweeps/NNNNNN.csv  header "t,x,y,z", one point per row, sensor frame
//   gt.txt           optional reference, "t tx ty tz qx qy qz qw" per line
//
// Sweep boundaries are implicit: a sweep begins at its first point's
// timestamp and ends where the next sweep begins (the last sweep's span is
// extrapolated from the previous boundary spacing).
//
// All readers throw DataError with a file/line context on malformed input.

void write_imu_csv(const std::string& path,
                   std::span<const ImuSample> samples);
std::vector<ImuSample> read_imu_csv(const std::string& path);

void write_sweep_csv(const std::string& path, const Sweep& sweep);
std::vector<TimedPoint> read_sweep_csv(const std::string& path);

struct Dataset {
  std::vector<ImuSample> imu;
  std::vector<Sweep> sweeps;
};

Dataset load_dataset(const std::string& directory);

// Timestamped pose lists in plain-text "t tx ty tz qx qy qz qw" rows.
void write_trajectory(const std::string& path, const Trajectory& trajectory);
Trajectory read_trajectory(const std::string& path);

// Full navigation states, two rows per sweep (begin and end boundary):
// "sweep,boundary,t,tx,ty,tz,qw,qx,qy,qz,vx,vy,vz,bax,bay,baz,bwx,bwy,bwz"
struct StateRow {
  int sweep = 0;
  int boundary = 1;  // 0 = sweep begin state, 1 = sweep end state
  NavState state;
};

void write_states_csv(const std::string& path, std::span<const StateRow> rows);
std::vector<StateRow> read_states_csv(const std::string& path);

// Per-sweep optimizer report:
// "sweep,t_end,converged,degenerate,outer_iterations,accepted_steps,
//  point_residuals,final_cost,cost_point,cost_imu,cost_logical,
//  step_norm,solve_seconds"
struct DiagnosticsRow {
  int sweep = 0;
  double t_end = 0.0;
  bool converged = false;
  bool degenerate = false;
  int outer_iterations = 0;
  int accepted_steps = 0;
  int point_residuals = 0;
  double final_cost = 0.0;
  double cost_point = 0.0;
  double cost_imu = 0.0;
  double cost_logical = 0.0;
  double step_norm = 0.0;
  double solve_seconds = 0.0;
};

void write_diagnostics_csv(const std::string& path,
                           std::span<const DiagnosticsRow> rows);
std::vector<DiagnosticsRow> read_diagnostics_csv(const std::string& path);

}  // namespace selio
