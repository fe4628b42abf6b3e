// Command-line front end: dataset simulation, odometry runs, trajectory
// evaluation, and configuration inspection.

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "selio/config.hpp"
#include "selio/dataset_io.hpp"
#include "selio/errors.hpp"
#include "selio/evaluation.hpp"
#include "selio/pipeline.hpp"
#include "selio/simulator.hpp"

namespace fs = std::filesystem;
using namespace selio;

namespace {

struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> overrides;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("-c,--config", args.config_path,
                  "Configuration file (key = value lines)")
      ->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", args.overrides,
                  "Override a configuration key (key=value), repeatable");
}

RunConfig resolve_config(const ConfigArgs& args) {
  RunConfig config =
      args.config_path.empty() ? RunConfig{} : load_config(args.config_path);
  for (const std::string& assignment : args.overrides) {
    apply_config_entry(config, assignment);
  }
  return config;
}

std::string metric(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9e", v);
  return buf;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << content;
  if (!out.good()) throw DataError("failed while writing '" + path + "'");
}

void run_simulate(const RunConfig& config, const std::string& output) {
  const TrajectorySpec spec = trajectory_spec(config);
  fs::create_directories(fs::path(output) / "sweeps");

  const std::vector<ImuSample> imu = gen_imu(spec, sim_imu_config(config));
  write_imu_csv((fs::path(output) / "imu.csv").string(), imu);

  Trajectory reference;
  reference.reserve(imu.size());
  for (const ImuSample& s : imu) {
    const ExactState exact = exact_state(spec, s.time);
    reference.push_back({s.time, exact.state.t, exact.state.q});
  }
  write_trajectory((fs::path(output) / "gt.txt").string(), reference);

  const SimLidarConfig lidar = sim_lidar_config(config);
  const WorldModel world = WorldModel::default_room();
  const double period = 1.0 / lidar.sweep_rate;
  std::vector<StateRow> gt_states;
  int index = 0;
  char name[32];
  while ((index + 1) * period <= spec.duration + 1e-9) {
    const Sweep sweep = gen_sweep(world, spec, lidar, index);
    std::snprintf(name, sizeof(name), "%06d.csv", index);
    write_sweep_csv((fs::path(output) / "sweeps" / name).string(), sweep);

    NavState truth_b = exact_state(spec, sweep.t_begin).state;
    NavState truth_e = exact_state(spec, sweep.t_end).state;
    truth_b.ba = truth_e.ba = config.sim_bias_accel;
    truth_b.bw = truth_e.bw = config.sim_bias_gyro;
    gt_states.push_back({index, 0, truth_b});
    gt_states.push_back({index, 1, truth_e});
    ++index;
  }
  write_states_csv((fs::path(output) / "gt_states.csv").string(), gt_states);
  write_text((fs::path(output) / "config.txt").string(), dump_config(config));

  std::cout << "sweeps = " << index << "\n"
            << "imu_samples = " << imu.size() << "\n"
            << "output = " << output << "\n";
}

void run_odometry_cmd(const RunConfig& config, const std::string& input,
                      const std::string& output) {
  const Dataset dataset = load_dataset(input);
  const PipelineResult result = run_odometry(dataset, config);

  fs::create_directories(output);
  write_trajectory((fs::path(output) / "poses.txt").string(),
                   result.trajectory);
  write_states_csv((fs::path(output) / "states.csv").string(), result.states);
  write_diagnostics_csv((fs::path(output) / "diagnostics.csv").string(),
                        result.diagnostics);
  write_text((fs::path(output) / "config.txt").string(), dump_config(config));

  double solve_total = 0.0;
  for (const DiagnosticsRow& d : result.diagnostics) {
    solve_total += d.solve_seconds;
  }
  const double mean_solve =
      result.optimized_sweeps > 0
          ? solve_total / static_cast<double>(result.optimized_sweeps)
          : 0.0;

  std::cout << "sweeps = " << result.states.size() << "\n"
            << "optimized = " << result.optimized_sweeps << "\n"
            << "degenerate = " << result.degenerate_sweeps << "\n"
            << "mean_solve_seconds = " << metric(mean_solve) << "\n"
            << "map_points = " << result.map_points << "\n"
            << "map_voxels = " << result.map_voxels << "\n"
            << "output = " << output << "\n";
}

bool is_states_csv(const std::string& path) {
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  return header.rfind("sweep,boundary,", 0) == 0;
}

void run_evaluate(const std::string& estimate_path,
                  const std::string& reference_path, bool no_align,
                  double max_extrapolation) {
  std::string est_file = estimate_path;
  if (std::filesystem::is_directory(est_file)) {
    est_file = (std::filesystem::path(est_file) / "states.csv").string();
  }

  Trajectory estimate;
  double smoothness = 0.0;
  if (is_states_csv(est_file)) {
    // Full state files carry estimated velocities, so the smoothness metric
    // uses them directly.  The pose sequence is assembled the same way the
    // pipeline writes its trajectory: a begin state supersedes the previous
    // end state at their shared timestamp.
    const std::vector<StateRow> rows = read_states_csv(est_file);
    std::vector<NavState> end_states;
    for (const StateRow& row : rows) {
      const TrajectorySample sample{row.state.time, row.state.t, row.state.q};
      if (row.boundary == 0) {
        if (!estimate.empty() &&
            std::abs(estimate.back().time - sample.time) < 1e-9) {
          estimate.back() = sample;
        } else if (estimate.empty() ||
                   sample.time > estimate.back().time) {
          estimate.push_back(sample);
        }
      } else {
        estimate.push_back(sample);
        end_states.push_back(row.state);
      }
    }
    smoothness = velocity_smoothness(end_states);
  } else {
    estimate = read_trajectory(est_file);
    smoothness = velocity_smoothness(estimate);
  }

  AteOptions options;
  options.align = !no_align;
  options.max_extrapolation = max_extrapolation;

  std::cout << "velocity_smoothness = " << metric(smoothness) << "\n"
            << "zigzag = " << metric(zigzag_score(estimate)) << "\n";
  if (!reference_path.empty()) {
    const Trajectory reference = read_trajectory(reference_path);
    std::cout << "ate_rmse = " << metric(ate_rmse(estimate, reference, options))
              << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-elastic lidar-inertial odometry"};
  app.require_subcommand(1);

  ConfigArgs sim_args;
  std::string sim_output;
  CLI::App* simulate =
      app.add_subcommand("simulate", "Generate a synthetic dataset");
  add_config_options(simulate, sim_args);
  simulate->add_option("-o,--output", sim_output, "Output dataset directory")
      ->required();

  ConfigArgs run_args;
  std::string run_input, run_output;
  CLI::App* run = app.add_subcommand("run", "Run odometry on a dataset");
  add_config_options(run, run_args);
  run->add_option("-i,--input", run_input, "Dataset directory")->required();
  run->add_option("-o,--output", run_output, "Output directory")->required();

  std::string eval_estimate, eval_reference;
  bool eval_no_align = false;
  double eval_max_extrapolation = 0.01;
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Compare an estimate to a reference");
  evaluate->add_option("-e,--estimate", eval_estimate,
                       "Estimated trajectory file, state file, or run output "
                       "directory")
      ->required()
      ->check(CLI::ExistingPath);
  evaluate->add_option("-r,--reference", eval_reference,
                       "Reference trajectory (optional)");
  evaluate->add_flag("--no-align", eval_no_align,
                     "Skip rigid alignment before the error computation");
  evaluate->add_option("--max-extrapolation", eval_max_extrapolation,
                       "Maximum extrapolation beyond the reference span [s]");

  ConfigArgs print_args;
  CLI::App* print_config =
      app.add_subcommand("print-config", "Dump the effective configuration");
  add_config_options(print_config, print_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help and friends: full help text, exit 0
    }
    std::cerr << "error: usage: " << e.what() << "\n";
    return 1;
  }

  try {
    if (simulate->parsed()) {
      run_simulate(resolve_config(sim_args), sim_output);
    } else if (run->parsed()) {
      run_odometry_cmd(resolve_config(run_args), run_input, run_output);
    } else if (evaluate->parsed()) {
      run_evaluate(eval_estimate, eval_reference, eval_no_align,
                   eval_max_extrapolation);
    } else if (print_config->parsed()) {
      std::cout << dump_config(resolve_config(print_args));
    }
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
