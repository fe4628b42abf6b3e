#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "selio/errors.hpp"
#include "selio/preprocessing.hpp"
#include "test_support.hpp"

using namespace selio;
using selio::testing::make_rng;
using selio::testing::random_vec;

namespace {

std::vector<TimedPoint> indexed_points(int n) {
  std::vector<TimedPoint> pts;
  for (int i = 0; i < n; ++i) {
    pts.push_back({{static_cast<double>(i), 0.0, 0.0}, 0.001 * i});
  }
  return pts;
}

}  // namespace

TEST_CASE("quantitative downsample keeps every step-th point from index 0") {
  const auto pts = indexed_points(8);
  const auto out = quantitative_downsample(pts, 4);
  REQUIRE(out.size() == 2);
  CHECK(out[0].position.x() == 0.0);
  CHECK(out[1].position.x() == 4.0);
}

TEST_CASE("quantitative downsample of a single point keeps it") {
  const auto pts = indexed_points(1);
  const auto out = quantitative_downsample(pts, 4);
  REQUIRE(out.size() == 1);
  CHECK(out[0].position.x() == 0.0);
}

TEST_CASE("quantitative downsample output is an ordered subset") {
  const auto pts = indexed_points(1000);
  const auto out = quantitative_downsample(pts, 4);
  REQUIRE(out.size() == 250);
  for (size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i].position.x() == 4.0 * static_cast<double>(i));
    CHECK(out[i].time == doctest::Approx(0.004 * static_cast<double>(i)));
  }
}

TEST_CASE("voxel downsample keeps first point per cell in input order") {
  std::vector<TimedPoint> pts;
  pts.push_back({{0.1, 0.1, 0.1}, 0.0});   // cell A
  pts.push_back({{0.2, 0.2, 0.2}, 1.0});   // cell A again -> dropped
  pts.push_back({{1.4, 0.1, 0.1}, 2.0});   // cell B
  pts.push_back({{0.3, 0.3, 0.3}, 3.0});   // cell A again -> dropped
  const auto out = voxel_downsample(pts, 1.0);
  REQUIRE(out.size() == 2);
  CHECK(out[0].time == 0.0);
  CHECK(out[1].time == 2.0);
}

TEST_CASE("voxel downsample never emits two points in one cell") {
  auto rng = make_rng(11);
  std::vector<TimedPoint> pts;
  for (int i = 0; i < 8000; ++i) {
    pts.push_back({random_vec(rng, 10.0), 0.0});
  }
  const double voxel = 0.5;
  const auto out = voxel_downsample(pts, voxel);
  CHECK(out.size() <= pts.size());
  std::set<std::tuple<long, long, long>> cells;
  for (const TimedPoint& p : out) {
    const auto cell = std::make_tuple(
        static_cast<long>(std::floor(p.position.x() / voxel)),
        static_cast<long>(std::floor(p.position.y() / voxel)),
        static_cast<long>(std::floor(p.position.z() / voxel)));
    CHECK(cells.insert(cell).second);
  }
}

TEST_CASE("uniform undistortion of a stationary sweep applies the extrinsic") {
  Sweep sweep;
  sweep.t_begin = 0.0;
  sweep.t_end = 0.1;
  auto rng = make_rng(12);
  for (int i = 0; i < 50; ++i) {
    sweep.points.push_back({random_vec(rng, 5.0), 0.002 * i});
  }
  NavState x;  // begin == end: no motion
  const Pose extrinsic{Rotation::exp({0.0, 0.0, 0.3}), {0.1, -0.2, 0.05}};
  const auto out = undistort_uniform(sweep, x, x, extrinsic);
  REQUIRE(out.size() == sweep.points.size());
  for (size_t i = 0; i < out.size(); ++i) {
    CHECK((out[i].position - extrinsic * sweep.points[i].position).norm() <
          1e-12);
    CHECK(out[i].time == sweep.points[i].time);
  }
}

TEST_CASE("uniform undistortion under pure translation shifts mid-sweep points") {
  Sweep sweep;
  sweep.t_begin = 0.0;
  sweep.t_end = 0.1;
  sweep.points.push_back({Vec3::Zero(), 0.05});  // measured at the sensor origin
  NavState x_b;
  NavState x_e;
  x_e.t = {1.0, 0.0, 0.0};
  const auto out = undistort_uniform(sweep, x_b, x_e, Pose{});
  REQUIRE(out.size() == 1);
  // Sensor origin at mid sweep sits at x = 0.5 in the world; seen from the
  // end pose at x = 1 that is half a meter behind.
  CHECK((out[0].position - Vec3(-0.5, 0.0, 0.0)).norm() < 1e-12);
}

TEST_CASE("uniform undistortion leaves end-of-sweep points fixed") {
  Sweep sweep;
  sweep.t_begin = 0.0;
  sweep.t_end = 0.1;
  const Vec3 p(1.0, 2.0, 3.0);
  sweep.points.push_back({p, 0.1});
  NavState x_b;
  x_b.t = {-3.0, 2.0, 1.0};
  x_b.q = Rotation::exp({0.2, -0.1, 0.4});
  NavState x_e;
  x_e.t = {1.0, -1.0, 0.5};
  x_e.q = Rotation::exp({-0.1, 0.3, 0.1});
  const Pose extrinsic{Rotation::exp({0.0, 0.1, 0.0}), {0.05, 0.0, -0.02}};
  const auto out = undistort_uniform(sweep, x_b, x_e, extrinsic);
  REQUIRE(out.size() == 1);
  CHECK((out[0].position - extrinsic * p).norm() < 1e-12);
}

TEST_CASE("imu undistortion matches uniform model for constant velocity") {
  Sweep sweep;
  sweep.t_begin = 1.0;
  sweep.t_end = 1.1;
  auto rng = make_rng(13);
  for (int i = 0; i < 40; ++i) {
    sweep.points.push_back({random_vec(rng, 5.0), 1.0 + 0.0025 * i});
  }
  const Vec3 gravity(0.0, 0.0, 9.81);
  const Vec3 v(0.8, -0.3, 0.1);
  NavState x_b;
  x_b.t = {0.5, 0.5, 0.5};
  x_b.v = v;
  x_b.time = sweep.t_begin;
  NavState x_e = x_b;
  x_e.t += 0.1 * v;
  x_e.time = sweep.t_end;
  // Constant velocity: the specific force reading equals gravity, zero rates.
  std::vector<ImuSample> window;
  for (int i = 0; i <= 20; ++i) {
    window.push_back({1.0 + 0.005 * i, gravity, Vec3::Zero()});
  }
  const Pose extrinsic{Rotation::exp({0.05, 0.0, 0.1}), {0.1, 0.0, 0.0}};
  const auto uniform = undistort_uniform(sweep, x_b, x_e, extrinsic);
  const auto inertial = undistort_imu(sweep, window, x_b, extrinsic, gravity);
  REQUIRE(inertial.size() == uniform.size());
  for (size_t i = 0; i < inertial.size(); ++i) {
    CHECK((inertial[i].position - uniform[i].position).norm() < 1e-6);
  }
}

TEST_CASE("imu undistortion recovers a pure rotation exactly") {
  const Vec3 gravity(0.0, 0.0, 9.81);
  const Vec3 omega(0.0, 0.0, 2.0);  // [rad/s] about world z
  Sweep sweep;
  sweep.t_begin = 0.0;
  sweep.t_end = 0.1;
  auto rng = make_rng(14);
  std::vector<Vec3> world_points;
  for (int i = 0; i < 30; ++i) {
    world_points.push_back(random_vec(rng, 4.0));
  }
  for (int i = 0; i < 30; ++i) {
    const double t = 0.1 * static_cast<double>(i) / 29.0;
    const Rotation q_wb = Rotation::exp(omega * t);
    sweep.points.push_back({q_wb.inverse() * world_points[i], t});
  }
  NavState x_b;  // identity attitude, zero velocity, rotating in place
  std::vector<ImuSample> window;
  for (int i = 0; i <= 40; ++i) {
    const double t = 0.0025 * i;
    const Rotation q_wb = Rotation::exp(omega * t);
    window.push_back({t, q_wb.inverse() * gravity, omega});
  }
  const auto out = undistort_imu(sweep, window, x_b, Pose{}, gravity);
  const Rotation q_end = Rotation::exp(omega * 0.1);
  REQUIRE(out.size() == sweep.points.size());
  for (size_t i = 0; i < out.size(); ++i) {
    const Vec3 expected = q_end.inverse() * world_points[i];
    CHECK((out[i].position - expected).norm() < 1e-4);
  }
}

TEST_CASE("imu undistortion rejects windows with coverage gaps") {
  Sweep sweep;
  sweep.t_begin = 0.0;
  sweep.t_end = 0.1;
  sweep.points.push_back({{1.0, 0.0, 0.0}, 0.05});
  NavState x_b;
  const Vec3 gravity(0.0, 0.0, 9.81);
  std::vector<ImuSample> late;  // starts far after the sweep begins
  for (int i = 0; i <= 10; ++i) {
    late.push_back({0.06 + 0.005 * i, gravity, Vec3::Zero()});
  }
  CHECK_THROWS_AS(undistort_imu(sweep, late, x_b, Pose{}, gravity), DataError);

  std::vector<ImuSample> gappy;  // interior hole wider than two periods
  for (int i = 0; i <= 4; ++i) gappy.push_back({0.005 * i, gravity, Vec3::Zero()});
  for (int i = 0; i <= 4; ++i) {
    gappy.push_back({0.08 + 0.005 * i, gravity, Vec3::Zero()});
  }
  CHECK_THROWS_AS(undistort_imu(sweep, gappy, x_b, Pose{}, gravity), DataError);
}
