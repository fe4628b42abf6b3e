#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "selio/imu_preintegration.hpp"
#include "test_support.hpp"

using namespace selio;
using selio::testing::FineIntegral;
using selio::testing::fine_integrate;
using selio::testing::make_rng;
using selio::testing::random_state;
using selio::testing::random_unit;
using selio::testing::random_vec;
using selio::testing::SmoothImuSignal;

namespace {

std::vector<ImuSample> constant_samples(const Vec3& accel, const Vec3& gyro,
                                        double duration, double rate) {
  std::vector<ImuSample> out;
  const int n = static_cast<int>(std::round(duration * rate));
  for (int i = 0; i <= n; ++i) {
    out.push_back({static_cast<double>(i) / rate, accel, gyro});
  }
  return out;
}

double integral_difference(const Preintegration& a, const Preintegration& b) {
  return (a.alpha - b.alpha).norm() + (a.beta - b.beta).norm() +
         a.gamma.angle_to(b.gamma);
}

}  // namespace

TEST_CASE("zero measurements integrate to the identity motion") {
  const auto samples = constant_samples(Vec3::Zero(), Vec3::Zero(), 0.1, 100.0);
  const Preintegration pre =
      integrate(samples, Vec3::Zero(), Vec3::Zero(), ImuNoiseModel{});
  CHECK(pre.alpha.norm() < 1e-15);
  CHECK(pre.beta.norm() < 1e-15);
  CHECK(pre.gamma.angle_to(Rotation()) < 1e-15);
  CHECK(pre.dt == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("constant acceleration integrates to the closed form") {
  const auto samples =
      constant_samples({1.0, 0.0, 0.0}, Vec3::Zero(), 0.1, 100.0);
  const Preintegration pre =
      integrate(samples, Vec3::Zero(), Vec3::Zero(), ImuNoiseModel{});
  CHECK((pre.beta - Vec3(0.1, 0.0, 0.0)).norm() < 1e-9);
  CHECK((pre.alpha - Vec3(0.005, 0.0, 0.0)).norm() < 1e-9);
}

TEST_CASE("constant rate integrates to the closed-form rotation") {
  const auto samples =
      constant_samples(Vec3::Zero(), {0.0, 0.0, 1.0}, 0.5, 100.0);
  const Preintegration pre =
      integrate(samples, Vec3::Zero(), Vec3::Zero(), ImuNoiseModel{});
  CHECK(pre.gamma.angle_to(Rotation::exp({0.0, 0.0, 0.5})) < 1e-6);
}

TEST_CASE("integration rejects degenerate sample sets") {
  std::vector<ImuSample> one = {{0.0, Vec3::Zero(), Vec3::Zero()}};
  CHECK_THROWS_AS(
      integrate(one, Vec3::Zero(), Vec3::Zero(), ImuNoiseModel{}),
      std::invalid_argument);
  std::vector<ImuSample> unordered = {{0.0, Vec3::Zero(), Vec3::Zero()},
                                      {0.01, Vec3::Zero(), Vec3::Zero()},
                                      {0.01, Vec3::Zero(), Vec3::Zero()}};
  CHECK_THROWS_AS(
      integrate(unordered, Vec3::Zero(), Vec3::Zero(), ImuNoiseModel{}),
      std::invalid_argument);
}

TEST_CASE("integrals match an independent fine-step oracle") {
  auto rng = make_rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const SmoothImuSignal signal = SmoothImuSignal::random(rng);
    const double t0 = 0.7 * trial;
    const double t1 = t0 + 0.1;
    const auto samples = signal.sample_range(t0, t1, 200.0);
    const Preintegration pre =
        integrate(samples, Vec3::Zero(), Vec3::Zero(), ImuNoiseModel{});
    const FineIntegral truth = fine_integrate(signal, t0, t1);
    CHECK((pre.alpha - truth.alpha).norm() < 1e-6);
    CHECK((pre.beta - truth.beta).norm() < 1e-6);
    CHECK(pre.gamma.angle_to(truth.gamma) < 1e-7);
  }
}

TEST_CASE("reference biases are subtracted from the measurements") {
  const Vec3 ba(0.05, -0.02, 0.01);
  const Vec3 bw(0.004, 0.001, -0.002);
  auto rng = make_rng(22);
  const SmoothImuSignal signal = SmoothImuSignal::random(rng);
  auto samples = signal.sample_range(0.0, 0.2, 200.0);
  const Preintegration clean =
      integrate(samples, Vec3::Zero(), Vec3::Zero(), ImuNoiseModel{});
  for (ImuSample& s : samples) {
    s.accel += ba;
    s.gyro += bw;
  }
  const Preintegration biased = integrate(samples, ba, bw, ImuNoiseModel{});
  CHECK(integral_difference(clean, biased) < 1e-12);
}

TEST_CASE("bias correction with zero delta is a no-op") {
  auto rng = make_rng(23);
  const SmoothImuSignal signal = SmoothImuSignal::random(rng);
  const auto samples = signal.sample_range(0.0, 0.3, 200.0);
  const Vec3 ba(0.01, 0.0, -0.01);
  const Vec3 bw(0.001, -0.002, 0.0);
  const Preintegration pre = integrate(samples, ba, bw, ImuNoiseModel{});
  const Preintegration same = bias_corrected(pre, ba, bw);
  CHECK(integral_difference(pre, same) < 1e-15);
}

TEST_CASE("accel-bias correction on a rotation-free window is exact") {
  const auto samples =
      constant_samples({1.0, -0.5, 0.3}, Vec3::Zero(), 0.2, 200.0);
  const Preintegration pre =
      integrate(samples, Vec3::Zero(), Vec3::Zero(), ImuNoiseModel{});
  const Vec3 delta(0.02, -0.015, 0.01);
  const Preintegration corrected = bias_corrected(pre, delta, Vec3::Zero());
  const Preintegration exact =
      integrate(samples, delta, Vec3::Zero(), ImuNoiseModel{});
  // Without rotation the integrals are linear in the accel bias, so the
  // first-order update has no truncation error at all.
  CHECK(integral_difference(corrected, exact) < 1e-12);
}

TEST_CASE("gyro-bias correction error is quadratic in the delta") {
  auto rng = make_rng(24);
  const SmoothImuSignal signal = SmoothImuSignal::random(rng);
  const auto samples = signal.sample_range(0.0, 0.5, 200.0);
  const Preintegration pre =
      integrate(samples, Vec3::Zero(), Vec3::Zero(), ImuNoiseModel{});
  for (int trial = 0; trial < 4; ++trial) {
    const Vec3 direction = random_unit(rng);
    const Vec3 delta = 0.02 * direction;
    const auto error_at = [&](const Vec3& dbw) {
      const Preintegration corrected = bias_corrected(pre, Vec3::Zero(), dbw);
      const Preintegration exact =
          integrate(samples, Vec3::Zero(), dbw, ImuNoiseModel{});
      return integral_difference(corrected, exact);
    };
    const double full = error_at(delta);
    const double half = error_at(0.5 * delta);
    REQUIRE(full > 1e-10);  // large enough to measure the ratio
    CHECK(full / half >= 3.5);
  }
}

TEST_CASE("residual vanishes on states advanced by the same rule") {
  auto rng = make_rng(25);
  const Vec3 gravity(0.0, 0.0, 9.81);
  for (int trial = 0; trial < 5; ++trial) {
    const SmoothImuSignal signal = SmoothImuSignal::random(rng);
    const auto samples = signal.sample_range(0.0, 0.4, 200.0);
    NavState x_b = random_state(rng);
    x_b.ba.setZero();
    x_b.bw.setZero();
    x_b.time = samples.front().time;
    NavState x_e = x_b;
    for (size_t i = 0; i + 1 < samples.size(); ++i) {
      x_e = midpoint_advance(x_e, samples[i], samples[i + 1], gravity);
    }
    CHECK(x_e.time == doctest::Approx(samples.back().time).epsilon(1e-12));
    const Preintegration pre =
        integrate(samples, Vec3::Zero(), Vec3::Zero(), ImuNoiseModel{});
    const Vec15 r = imu_residual(pre, x_b, x_e, gravity);
    CHECK(r.norm() < 1e-9);
  }
}

TEST_CASE("residual vanishes for identical states and empty integral") {
  NavState x;
  x.time = 1.0;
  Preintegration pre;  // dt == 0, identity integrals
  pre.ref_ba = x.ba;
  pre.ref_bw = x.bw;
  const Vec15 r = imu_residual(pre, x, x, Vec3::Zero());
  CHECK(r.norm() < 1e-15);
}

TEST_CASE("translation residual reacts linearly to an end-position shift") {
  const Vec3 gravity(0.0, 0.0, 9.81);
  const auto samples = constant_samples(gravity, Vec3::Zero(), 0.1, 200.0);
  NavState x_b;  // identity attitude at rest
  x_b.time = 0.0;
  NavState x_e = x_b;
  x_e.time = 0.1;
  const Preintegration pre =
      integrate(samples, Vec3::Zero(), Vec3::Zero(), ImuNoiseModel{});
  const Vec15 base = imu_residual(pre, x_b, x_e, gravity);
  CHECK(base.norm() < 1e-9);
  NavState shifted = x_e;
  shifted.t += Vec3(0.1, 0.0, 0.0);
  const Vec15 r = imu_residual(pre, x_b, shifted, gravity);
  CHECK((r.segment<3>(kErrT) - base.segment<3>(kErrT) - Vec3(0.1, 0.0, 0.0))
            .norm() < 1e-9);
  CHECK((r.tail<12>() - base.tail<12>()).norm() < 1e-12);
}

TEST_CASE("residual rejects states whose span disagrees with the integral") {
  const auto samples =
      constant_samples(Vec3::Zero(), Vec3::Zero(), 0.1, 200.0);
  const Preintegration pre =
      integrate(samples, Vec3::Zero(), Vec3::Zero(), ImuNoiseModel{});
  NavState x_b;
  x_b.time = 0.0;
  NavState x_e;
  x_e.time = 0.1 + 0.05;  // ten sample periods beyond the integral span
  CHECK_THROWS_AS(imu_residual(pre, x_b, x_e, {0.0, 0.0, 9.81}),
                  std::invalid_argument);
}

TEST_CASE("analytic residual Jacobian matches central differences") {
  auto rng = make_rng(26);
  const Vec3 gravity(0.0, 0.0, 9.81);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const SmoothImuSignal signal = SmoothImuSignal::random(rng);
    const auto samples = signal.sample_range(0.0, 0.1, 200.0);
    const Vec3 ba = random_vec(rng, 0.05);
    const Vec3 bw = random_vec(rng, 0.01);
    const Preintegration pre = integrate(samples, ba, bw, ImuNoiseModel{});
    NavState x_b = random_state(rng);
    x_b.ba = ba + random_vec(rng, 0.01);
    x_b.bw = bw + random_vec(rng, 0.005);
    x_b.time = 0.0;
    NavState x_e = random_state(rng);
    x_e.ba = x_b.ba + random_vec(rng, 0.002);
    x_e.bw = x_b.bw + random_vec(rng, 0.001);
    x_e.time = 0.1;

    const ImuResidualJacobian out =
        imu_residual_jacobian(pre, x_b, x_e, gravity);
    CHECK((out.residual - imu_residual(pre, x_b, x_e, gravity)).norm() <
          1e-12);

    Eigen::Matrix<double, 15, 30> fd;
    for (int c = 0; c < 30; ++c) {
      Vec15 delta = Vec15::Zero();
      const bool begin = c < 15;
      delta[c % 15] = h;
      const NavState bp = begin ? boxplus(x_b, delta) : x_b;
      const NavState ep = begin ? x_e : boxplus(x_e, delta);
      const NavState bm = begin ? boxplus(x_b, -delta) : x_b;
      const NavState em = begin ? x_e : boxplus(x_e, -delta);
      fd.col(c) = (imu_residual(pre, bp, ep, gravity) -
                   imu_residual(pre, bm, em, gravity)) /
                  (2.0 * h);
    }
    CHECK(selio::testing::max_relative_error(out.jacobian, fd) < 1e-4);
  }
}

TEST_CASE("covariance stays symmetric positive semidefinite") {
  auto rng = make_rng(27);
  const SmoothImuSignal signal = SmoothImuSignal::random(rng);
  const auto samples = signal.sample_range(0.0, 0.5, 200.0);
  const Preintegration pre =
      integrate(samples, Vec3::Zero(), Vec3::Zero(), ImuNoiseModel{});
  CHECK((pre.covariance - pre.covariance.transpose()).norm() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Mat15> eig(pre.covariance);
  CHECK(eig.eigenvalues().minCoeff() > -1e-12);
  // The propagated noise has to actually accumulate somewhere.
  CHECK(pre.covariance.trace() > 0.0);
}

TEST_CASE("integrating split windows composes to the full window") {
  auto rng = make_rng(28);
  const SmoothImuSignal signal = SmoothImuSignal::random(rng);
  const auto samples = signal.sample_range(0.0, 0.4, 200.0);
  const size_t mid = samples.size() / 2;
  const std::span<const ImuSample> all(samples);
  const Preintegration full =
      integrate(all, Vec3::Zero(), Vec3::Zero(), ImuNoiseModel{});
  const Preintegration first = integrate(all.subspan(0, mid + 1), Vec3::Zero(),
                                         Vec3::Zero(), ImuNoiseModel{});
  const Preintegration second = integrate(all.subspan(mid), Vec3::Zero(),
                                          Vec3::Zero(), ImuNoiseModel{});
  Preintegration composed;
  composed.alpha =
      first.alpha + first.beta * second.dt + first.gamma * second.alpha;
  composed.beta = first.beta + first.gamma * second.beta;
  composed.gamma = first.gamma * second.gamma;
  CHECK(integral_difference(composed, full) < 1e-9);
}
