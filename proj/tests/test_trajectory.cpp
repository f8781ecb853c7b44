#include <doctest.h>

#include <cmath>

#include "cavsched/error.hpp"
#include "cavsched/rng.hpp"
#include "cavsched/trajectory.hpp"

using namespace cavsched;

namespace {

// Closed form of the same boundary problem: with u(T) = 0 the system reduces
// to c2 = -3 c3 T and c3 = (p0 + v0 T - pf) / (2 T^3).
std::array<double, 4> closed_form(double p0, double v0, double T, double pf) {
  const double c3 = (p0 + v0 * T - pf) / (2.0 * T * T * T);
  return {p0, v0, -3.0 * c3 * T, c3};
}

}  // namespace

TEST_CASE("cubic for 250 m in 20 s from 10 m/s") {
  const auto p = solve_coefficients(0.0, 0.0, 10.0, 20.0, 250.0);
  CHECK(p.phi3 == doctest::Approx(-0.003125).epsilon(1e-14));
  CHECK(p.phi2 == doctest::Approx(0.1875).epsilon(1e-14));
  CHECK(p.phi1 == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(std::abs(p.phi0) < 1e-12);

  const auto end = eval(p, 20.0);
  CHECK(end.pos == doctest::Approx(250.0).epsilon(1e-13));
  CHECK(end.speed == doctest::Approx(13.75).epsilon(1e-13));
  CHECK(std::abs(end.accel) < 1e-12);
  const auto start = eval(p, 0.0);
  CHECK(std::abs(start.pos) < 1e-12);
  CHECK(start.speed == doctest::Approx(10.0));
  CHECK(start.accel == doctest::Approx(0.375));
}

TEST_CASE("absolute coefficients for a late epoch") {
  // Same motion shifted to start at t = 100.
  const auto p = solve_coefficients(100.0, 0.0, 10.0, 120.0, 250.0);
  CHECK(p.phi3 == doctest::Approx(-0.003125));
  CHECK(p.phi2 == doctest::Approx(1.125));
  CHECK(p.phi1 == doctest::Approx(-121.25));
  CHECK(p.phi0 == doctest::Approx(4000.0));
  CHECK(eval(p, 120.0).pos == doctest::Approx(250.0).epsilon(1e-13));
  CHECK(eval(p, 110.0).pos == doctest::Approx(eval(solve_coefficients(0, 0, 10, 20, 250), 10.0).pos));
}

TEST_CASE("linear solve matches the closed form on random inputs") {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const double t0 = rng.uniform(0.0, 5000.0);
    const double p0 = rng.uniform(0.0, 240.0);
    const double v0 = rng.uniform(0.5, 25.0);
    const double T = rng.uniform(0.05, 300.0);
    const double pf = 250.0;
    const auto p = solve_coefficients(t0, p0, v0, t0 + T, pf);
    const auto c = closed_form(p0, v0, T, pf);
    for (int k = 0; k < 4; ++k) CHECK(p.local[k] == doctest::Approx(c[k]).epsilon(1e-9).scale(1e-12));
  }
}

TEST_CASE("boundary residuals stay tiny") {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double t0 = rng.uniform(0.0, 3600.0);
    const double p0 = rng.uniform(0.0, 249.0);
    const double v0 = rng.uniform(1.0, 20.0);
    const double tf = t0 + rng.uniform(0.5, 120.0);
    const auto p = solve_coefficients(t0, p0, v0, tf, 250.0);
    const auto a = eval(p, t0);
    const auto b = eval(p, tf);
    CHECK(std::abs(a.pos - p0) <= 1e-9);
    CHECK(std::abs(a.speed - v0) <= 1e-9);
    CHECK(std::abs(b.pos - 250.0) <= 1e-9);
    CHECK(std::abs(b.accel) <= 1e-9);
  }
}

TEST_CASE("degenerate horizon is rejected") {
  CHECK_THROWS_AS(solve_coefficients(5.0, 0.0, 10.0, 5.0, 250.0), Error);
  try {
    solve_coefficients(5.0, 0.0, 10.0, 5.0 + 1e-8, 250.0);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate_horizon);
  }
}

TEST_CASE("eval outside the window is a domain error") {
  const auto p = solve_coefficients(0.0, 0.0, 10.0, 20.0, 250.0);
  CHECK_NOTHROW(eval(p, 20.0 + 1e-10));
  try {
    eval(p, 20.5);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::domain);
  }
  CHECK_THROWS_AS(eval(p, -0.1), Error);
}

TEST_CASE("min speed finds the interior vertex") {
  // v(tau) = 10 + 0.375 tau - 0.009375 tau^2 rises monotonically on [0, 20].
  CHECK(min_speed(solve_coefficients(0, 0, 10, 20, 250)) == doctest::Approx(10.0));
  // Slow exit: c3 > 0, vertex at tau = T, v(T) = 1.5 d / T - v0 / 2.
  CHECK(min_speed(solve_coefficients(0, 0, 20, 30, 250)) == doctest::Approx(2.5));
  // Very slow exit reverses.
  CHECK(min_speed(solve_coefficients(0, 0, 20, 100, 250)) < 0.0);
}

TEST_CASE("crossing time round trip") {
  Rng rng(21);
  for (int i = 0; i < 300; ++i) {
    const double t0 = rng.uniform(0.0, 1000.0);
    const double v0 = rng.uniform(5.0, 20.0);
    const double T = 250.0 / v0 * rng.uniform(0.8, 1.3);
    const auto p = solve_coefficients(t0, 0.0, v0, t0 + T, 250.0);
    if (!(min_speed(p) > 0.0)) continue;
    const double t = t0 + rng.uniform(0.0, T);
    const double x = eval(p, t).pos;
    CHECK(std::abs(crossing_time(p, x) - t) <= 1e-6);
  }
  const auto p = solve_coefficients(0, 0, 20, 12.5, 250);
  CHECK(crossing_time(p, 235.0) == doctest::Approx(11.75).epsilon(1e-12));
  CHECK(crossing_time(p, 0.0) == 0.0);
  CHECK(crossing_time(p, 250.0) == 12.5);
}

TEST_CASE("crossing time rejects bad queries") {
  const auto p = solve_coefficients(0, 0, 20, 12.5, 250);
  try {
    crossing_time(p, 260.0);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::domain);
  }
  try {
    crossing_time(solve_coefficients(0, 0, 20, 100, 250), 100.0);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_plan);
  }
}

TEST_CASE("feasible range from bang-bang profiles") {
  const auto c = default_scenario();
  // Accelerate 10 -> 20 over 50 m in 10/3 s, cruise 200 m; brake 10 -> 1 over
  // 12.375 m in 2.25 s, crawl 237.625 m.
  auto r = feasible_range(0.0, 10.0, 250.0, c);
  CHECK(r.t_lo == doctest::Approx(13.0 + 1.0 / 3.0).epsilon(1e-14));
  CHECK(r.t_hi == doctest::Approx(239.875).epsilon(1e-14));

  // Short distances stop inside the ramps.
  r = feasible_range(230.0, 10.0, 250.0, c);
  CHECK(r.t_lo == doctest::Approx((-10.0 + std::sqrt(220.0)) / 3.0));
  CHECK(r.t_hi == doctest::Approx(2.25 + 7.625));
  r = feasible_range(245.0, 10.0, 250.0, c);
  CHECK(r.t_hi == doctest::Approx((10.0 - std::sqrt(60.0)) / 4.0));

  // At v_max the lower bound is pure cruise.
  CHECK(feasible_range(0.0, 20.0, 250.0, c).t_lo == doctest::Approx(12.5));
  CHECK_THROWS_AS(feasible_range(250.0, 10.0, 250.0, c), Error);
}
