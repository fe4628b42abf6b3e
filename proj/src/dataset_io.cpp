#include "selio/dataset_io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "selio/errors.hpp"

namespace fs = std::filesystem;

namespace selio {
namespace {

[[noreturn]] void parse_error(const std::string& path, int line_no,
                              const std::string& what) {
  throw DataError(path + ":" + std::to_string(line_no) + ": " + what);
}

std::vector<double> parse_csv_row(const std::string& path, int line_no,
                                  const std::string& line, size_t expected) {
  std::vector<double> out;
  out.reserve(expected);
  size_t begin = 0;
  while (true) {
    const size_t end = line.find(',', begin);
    const std::string field = line.substr(
        begin, end == std::string::npos ? std::string::npos : end - begin);
    size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(field, &used);
    } catch (const std::exception&) {
      parse_error(path, line_no, "bad number '" + field + "'");
    }
    if (used != field.size()) {
      parse_error(path, line_no, "bad number '" + field + "'");
    }
    out.push_back(value);
    if (end == std::string::npos) break;
    begin = end + 1;
  }
  if (out.size() != expected) {
    parse_error(path, line_no,
                "expected " + std::to_string(expected) + " fields, got " +
                    std::to_string(out.size()));
  }
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  return out;
}

void check_written(const std::ofstream& out, const std::string& path) {
  if (!out.good()) throw DataError("failed while writing '" + path + "'");
}

void expect_header(std::ifstream& in, const std::string& path,
                   const std::string& expected) {
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(path + ": empty file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected) {
    parse_error(path, 1, "expected header '" + expected + "'");
  }
}

std::string fixed9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9e", v);
  return buf;
}

}  // namespace

void write_imu_csv(const std::string& path,
                   std::span<const ImuSample> samples) {
  std::ofstream out = open_output(path);
  out << "t,ax,ay,az,gx,gy,gz\n";
  for (const ImuSample& s : samples) {
    out << fixed9(s.time) << ',' << fixed9(s.accel.x()) << ','
        << fixed9(s.accel.y()) << ',' << fixed9(s.accel.z()) << ','
        << fixed9(s.gyro.x()) << ',' << fixed9(s.gyro.y()) << ','
        << fixed9(s.gyro.z()) << '\n';
  }
  check_written(out, path);
}

std::vector<ImuSample> read_imu_csv(const std::string& path) {
  std::ifstream in = open_input(path);
  expect_header(in, path, "t,ax,ay,az,gx,gy,gz");
  std::vector<ImuSample> out;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = parse_csv_row(path, line_no, line, 7);
    ImuSample s;
    s.time = f[0];
    s.accel = Vec3(f[1], f[2], f[3]);
    s.gyro = Vec3(f[4], f[5], f[6]);
    if (!out.empty() && s.time <= out.back().time) {
      parse_error(path, line_no, "non-increasing timestamp");
    }
    out.push_back(s);
  }
  return out;
}

void write_sweep_csv(const std::string& path, const Sweep& sweep) {
  std::ofstream out = open_output(path);
  out << "t,x,y,z\n";
  for (const TimedPoint& p : sweep.points) {
    out << fixed9(p.time) << ',' << fixed9(p.position.x()) << ','
        << fixed9(p.position.y()) << ',' << fixed9(p.position.z()) << '\n';
  }
  check_written(out, path);
}

std::vector<TimedPoint> read_sweep_csv(const std::string& path) {
  std::ifstream in = open_input(path);
  expect_header(in, path, "t,x,y,z");
  std::vector<TimedPoint> out;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = parse_csv_row(path, line_no, line, 4);
    out.push_back({Vec3(f[1], f[2], f[3]), f[0]});
  }
  return out;
}

Dataset load_dataset(const std::string& directory) {
  Dataset dataset;
  dataset.imu = read_imu_csv((fs::path(directory) / "imu.csv").string());
  if (dataset.imu.size() < 2) {
    throw DataError(directory + ": imu.csv needs at least two samples");
  }

  const fs::path sweep_dir = fs::path(directory) / "sweeps";
  if (!fs::is_directory(sweep_dir)) {
    throw DataError(directory + ": missing sweeps/ directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(sweep_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw DataError(directory + ": no sweep files in sweeps/");
  }

  for (size_t i = 0; i < files.size(); ++i) {
    Sweep sweep;
    sweep.points = read_sweep_csv(files[i].string());
    if (sweep.points.empty()) {
      throw DataError(files[i].string() + ": empty sweep");
    }
    sweep.index = static_cast<int>(i);
    sweep.t_begin = sweep.points.front().time;
    dataset.sweeps.push_back(std::move(sweep));
  }
  for (size_t i = 0; i + 1 < dataset.sweeps.size(); ++i) {
    dataset.sweeps[i].t_end = dataset.sweeps[i + 1].t_begin;
    if (dataset.sweeps[i].t_end <= dataset.sweeps[i].t_begin) {
      throw DataError(files[i].string() + ": sweep boundaries not increasing");
    }
  }
  Sweep& last = dataset.sweeps.back();
  if (dataset.sweeps.size() >= 2) {
    const Sweep& prev = dataset.sweeps[dataset.sweeps.size() - 2];
    last.t_end = last.t_begin + (last.t_begin - prev.t_begin);
  } else {
    last.t_end = last.points.back().time;
  }
  if (last.t_end <= last.t_begin) {
    throw DataError(files.back().string() + ": degenerate sweep span");
  }
  return dataset;
}

void write_trajectory(const std::string& path, const Trajectory& trajectory) {
  std::ofstream out = open_output(path);
  for (const TrajectorySample& s : trajectory) {
    out << fixed9(s.time) << ' ' << fixed9(s.translation.x()) << ' '
        << fixed9(s.translation.y()) << ' ' << fixed9(s.translation.z()) << ' '
        << fixed9(s.rotation.x()) << ' ' << fixed9(s.rotation.y()) << ' '
        << fixed9(s.rotation.z()) << ' ' << fixed9(s.rotation.w()) << '\n';
  }
  check_written(out, path);
}

Trajectory read_trajectory(const std::string& path) {
  std::ifstream in = open_input(path);
  Trajectory out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::istringstream row(line);
    double t, tx, ty, tz, qx, qy, qz, qw;
    if (!(row >> t >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
      parse_error(path, line_no, "expected 't tx ty tz qx qy qz qw'");
    }
    std::string rest;
    if (row >> rest) {
      parse_error(path, line_no, "trailing fields");
    }
    TrajectorySample s;
    s.time = t;
    s.translation = Vec3(tx, ty, tz);
    try {
      s.rotation = Rotation::from_quaternion(qw, qx, qy, qz);
    } catch (const std::exception&) {
      parse_error(path, line_no, "bad quaternion");
    }
    if (!out.empty() && s.time <= out.back().time) {
      parse_error(path, line_no, "non-increasing timestamp");
    }
    out.push_back(s);
  }
  if (out.empty()) throw DataError(path + ": empty trajectory");
  return out;
}

static const char kStatesHeader[] =
    "sweep,boundary,t,tx,ty,tz,qw,qx,qy,qz,vx,vy,vz,bax,bay,baz,bwx,bwy,bwz";

void write_states_csv(const std::string& path,
                      std::span<const StateRow> rows) {
  std::ofstream out = open_output(path);
  out << kStatesHeader << '\n';
  for (const StateRow& row : rows) {
    const NavState& x = row.state;
    out << row.sweep << ',' << row.boundary << ','
        << fixed9(x.time) << ',' << fixed9(x.t.x()) << ','
        << fixed9(x.t.y()) << ',' << fixed9(x.t.z()) << ',' << fixed9(x.q.w())
        << ',' << fixed9(x.q.x()) << ',' << fixed9(x.q.y()) << ','
        << fixed9(x.q.z()) << ',' << fixed9(x.v.x()) << ',' << fixed9(x.v.y())
        << ',' << fixed9(x.v.z()) << ',' << fixed9(x.ba.x()) << ','
        << fixed9(x.ba.y()) << ',' << fixed9(x.ba.z()) << ','
        << fixed9(x.bw.x()) << ',' << fixed9(x.bw.y()) << ','
        << fixed9(x.bw.z()) << '\n';
  }
  check_written(out, path);
}

std::vector<StateRow> read_states_csv(const std::string& path) {
  std::ifstream in = open_input(path);
  expect_header(in, path, kStatesHeader);
  std::vector<StateRow> out;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = parse_csv_row(path, line_no, line, 19);
    StateRow row;
    row.sweep = static_cast<int>(f[0]);
    row.boundary = static_cast<int>(f[1]);
    row.state.time = f[2];
    row.state.t = Vec3(f[3], f[4], f[5]);
    try {
      row.state.q = Rotation::from_quaternion(f[6], f[7], f[8], f[9]);
    } catch (const std::exception&) {
      parse_error(path, line_no, "bad quaternion");
    }
    row.state.v = Vec3(f[10], f[11], f[12]);
    row.state.ba = Vec3(f[13], f[14], f[15]);
    row.state.bw = Vec3(f[16], f[17], f[18]);
    out.push_back(row);
  }
  return out;
}

static const char kDiagnosticsHeader[] =
    "sweep,t_end,converged,degenerate,outer_iterations,accepted_steps,"
    "point_residuals,final_cost,cost_point,cost_imu,cost_logical,step_norm,"
    "solve_seconds";

void write_diagnostics_csv(const std::string& path,
                           std::span<const DiagnosticsRow> rows) {
  std::ofstream out = open_output(path);
  out << kDiagnosticsHeader << '\n';
  for (const DiagnosticsRow& d : rows) {
    out << d.sweep << ',' << fixed9(d.t_end) << ',' << (d.converged ? 1 : 0)
        << ',' << (d.degenerate ? 1 : 0) << ',' << d.outer_iterations << ','
        << d.accepted_steps << ',' << d.point_residuals << ','
        << sci(d.final_cost) << ',' << sci(d.cost_point) << ','
        << sci(d.cost_imu) << ',' << sci(d.cost_logical) << ','
        << sci(d.step_norm) << ',' << sci(d.solve_seconds) << '\n';
  }
  check_written(out, path);
}

std::vector<DiagnosticsRow> read_diagnostics_csv(const std::string& path) {
  std::ifstream in = open_input(path);
  expect_header(in, path, kDiagnosticsHeader);
  std::vector<DiagnosticsRow> out;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = parse_csv_row(path, line_no, line, 13);
    DiagnosticsRow d;
    d.sweep = static_cast<int>(f[0]);
    d.t_end = f[1];
    d.converged = f[2] != 0.0;
    d.degenerate = f[3] != 0.0;
    d.outer_iterations = static_cast<int>(f[4]);
    d.accepted_steps = static_cast<int>(f[5]);
    d.point_residuals = static_cast<int>(f[6]);
    d.final_cost = f[7];
    d.cost_point = f[8];
    d.cost_imu = f[9];
    d.cost_logical = f[10];
    d.step_norm = f[11];
    d.solve_seconds = f[12];
    out.push_back(d);
  }
  return out;
}

}  // namespace selio
