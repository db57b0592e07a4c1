#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "chpf/metrics.hpp"
#include "chpf/rng.hpp"

using namespace chpf;

namespace {

std::vector<Eigen::Vector3d> square_corners() {
  return {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
}

std::vector<Eigen::Vector3d> ring(int n, double radius) {
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    pts.emplace_back(radius * std::cos(a), radius * std::sin(a), 0.0);
  }
  return pts;
}

Pose random_pose(RandomStream& r) {
  return {Eigen::Vector3d(r.normal(), r.normal(), r.normal()) * 0.1, uniform_rotation(r)};
}

std::vector<RunTraceRow> trace_from(const std::vector<double>& errors) {
  std::vector<RunTraceRow> t;
  for (std::size_t k = 0; k < errors.size(); ++k) {
    RunTraceRow row;
    row.frame = static_cast<std::int64_t>(k);
    row.err_add = errors[k];
    row.err_adds = errors[k];
    t.push_back(row);
  }
  return t;
}

// Fraction of errors below tau, integrated over [0, T] by the trapezoid rule.
double auc_numeric(std::vector<double> errors, double T, int steps) {
  std::sort(errors.begin(), errors.end());
  const double n = static_cast<double>(errors.size());
  std::size_t below = 0;
  auto acc = [&](double tau) {
    while (below < errors.size() && errors[below] < tau) ++below;
    return static_cast<double>(below) / n;
  };
  double s = 0.0;
  const double h = T / steps;
  double prev = acc(0.0);
  for (int i = 1; i <= steps; ++i) {
    const double cur = acc(i * h);
    s += 0.5 * (prev + cur) * h;
    prev = cur;
  }
  return s / T;
}

}  // namespace

TEST_CASE("ADD examples") {
  const auto pts = square_corners();
  const Pose gt(Eigen::Vector3d(0.3, -0.1, 0.5), axis_angle(Eigen::Vector3d::UnitY(), 0.2));
  CHECK(add_error(pts, gt, gt) == 0.0);

  const Pose a(Eigen::Vector3d(1, 2, 2), Eigen::Quaterniond::Identity());
  const Pose b(Eigen::Vector3d::Zero(), Eigen::Quaterniond::Identity());
  CHECK(add_error(pts, a, b) == doctest::Approx(3.0).epsilon(1e-15));

  const Pose rot(Eigen::Vector3d::Zero(), axis_angle(Eigen::Vector3d::UnitZ(), std::numbers::pi / 2));
  double oracle = 0.0;
  for (const auto& p : pts) {
    const Eigen::Vector3d q(-p.y(), p.x(), p.z());
    oracle += (q - p).norm();
  }
  oracle /= 4.0;
  CHECK(add_error(pts, rot, b) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(oracle == doctest::Approx((0.0 + 2 * std::sqrt(2.0) + 2.0) / 4.0));

  CHECK_THROWS(add_error({}, a, b));
}

TEST_CASE("ADD-S on a symmetric ring") {
  const auto pts = ring(36, 0.05);
  const Pose gt(Eigen::Vector3d(0, 0, 0.7), Eigen::Quaterniond::Identity());
  CHECK(adds_error(pts, gt, gt) == 0.0);
  const Pose spun(gt.translation, axis_angle(Eigen::Vector3d::UnitZ(), 0.3));
  const double chord = 2.0 * 0.05 * std::sin(std::numbers::pi / 36.0);
  CHECK(adds_error(pts, spun, gt) < chord);
  CHECK(add_error(pts, spun, gt) > 0.01);
  CHECK_THROWS(adds_error({}, spun, gt));
}

TEST_CASE("ADD-S never exceeds ADD and both are invariant to a shared rigid motion") {
  RandomStream r(3, StreamId::Initialization);
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < 40; ++i) pts.emplace_back(r.normal() * 0.05, r.normal() * 0.05, r.normal() * 0.05);
  for (int trial = 0; trial < 10000; ++trial) {
    const Pose a = random_pose(r);
    const Pose b = random_pose(r);
    REQUIRE(adds_error(pts, a, b) <= add_error(pts, a, b) + 1e-12);
  }
  for (int trial = 0; trial < 100; ++trial) {
    const Pose a = random_pose(r);
    const Pose b = random_pose(r);
    const Pose g = random_pose(r);
    CHECK(add_error(pts, compose(g, a), compose(g, b)) == doctest::Approx(add_error(pts, a, b)).epsilon(1e-9));
    CHECK(adds_error(pts, compose(g, a), compose(g, b)) == doctest::Approx(adds_error(pts, a, b)).epsilon(1e-9));
  }
}

TEST_CASE("planar error") {
  CHECK(planar_error(PlanarState(1, 1, 0), PlanarState(4, 5, 2)) == doctest::Approx(5.0));
  CHECK(planar_error(PlanarState(1, 1, 0), PlanarState(1, 1, 0)) == 0.0);
}

TEST_CASE("AUC examples") {
  const std::vector<double> zero(10, 0.0);
  CHECK(auc(zero, 0.1) == 1.0);
  const std::vector<double> big{0.1, 0.2, 5.0};
  CHECK(auc(big, 0.1) == 0.0);
  const std::vector<double> half(7, 0.05);
  CHECK(auc(half, 0.1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(auc(half, 0.1) - auc_numeric(half, 0.1, 1000000)) < 1e-6);
  CHECK_THROWS(auc({}, 0.1));
  CHECK_THROWS(auc(half, 0.0));
  const std::vector<double> inf{std::numeric_limits<double>::infinity()};
  CHECK(auc(inf, 0.1) == 0.0);
}

TEST_CASE("AUC closed form matches numerical integration") {
  RandomStream r(5, StreamId::Initialization);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> e(50);
    for (auto& x : e) x = r.uniform(0.0, 0.15);
    // Fine enough that the step discontinuities contribute < 1e-6.
    CHECK(std::abs(auc(e, 0.1) - auc_numeric(e, 0.1, 1000000)) < 1e-6);
  }
}

TEST_CASE("summarize_auc covers both columns") {
  auto t = trace_from({0.0, 0.05, 0.2});
  t[1].err_adds = 0.0;
  const auto s = summarize_auc(t, 0.1);
  CHECK(s.n_frames == 3);
  CHECK(s.auc_add == doctest::Approx(0.5));
  CHECK(s.auc_adds == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("recovery time") {
  SUBCASE("already recovered") {
    const auto t = trace_from(std::vector<double>(30, 0.01));
    CHECK(recovery_time(t, 10, 0.05, 3) == 10);
  }
  SUBCASE("never recovers") {
    const auto t = trace_from(std::vector<double>(30, 1.0));
    CHECK(recovery_time(t, 10, 0.05, 3) == kNeverRecovered);
  }
  SUBCASE("dip at frame 12 held for 3 frames") {
    std::vector<double> e(30, 1.0);
    e[10] = 0.01;  // a single frame is not enough
    for (int k = 12; k < 15; ++k) e[static_cast<std::size_t>(k)] = 0.01;
    CHECK(recovery_time(trace_from(e), 10, 0.05, 3) == 12);
  }
  SUBCASE("a dip too short to count") {
    std::vector<double> e(30, 1.0);
    e[12] = e[13] = 0.01;
    CHECK(recovery_time(trace_from(e), 10, 0.05, 3) == kNeverRecovered);
  }
}
