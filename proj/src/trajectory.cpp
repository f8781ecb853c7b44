#include "cavsched/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cavsched/error.hpp"

namespace cavsched {

namespace {

constexpr double kMinHorizon = 1e-6;
constexpr double kWindowTol = 1e-9;

// Gaussian elimination with partial pivoting on a 4x4 system.
std::array<double, 4> solve4(std::array<std::array<double, 5>, 4> m) {
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    if (std::abs(m[piv][col]) < 1e-300) fail(ErrorCode::degenerate_horizon, "singular trajectory system");
    std::swap(m[col], m[piv]);
    for (int r = col + 1; r < 4; ++r) {
      const double f = m[r][col] / m[col][col];
      for (int c = col; c < 5; ++c) m[r][c] -= f * m[col][c];
    }
  }
  std::array<double, 4> x{};
  for (int r = 3; r >= 0; --r) {
    double s = m[r][4];
    for (int c = r + 1; c < 4; ++c) s -= m[r][c] * x[c];
    x[r] = s / m[r][r];
  }
  return x;
}

}  // namespace

TrajectoryPlan solve_coefficients(double t0, double p0, double v0, double tf, double pf) {
  const double T = tf - t0;
  if (!(T >= kMinHorizon)) {
    std::ostringstream os;
    os << "degenerate horizon: tf - t0 = " << T;
    fail(ErrorCode::degenerate_horizon, os.str());
  }

  // Rows: p(0) = p0, v(0) = v0, p(T) = pf, u(T) = 0, unknowns (c3, c2, c1, c0)
  // in local time.
  const double T2 = T * T, T3 = T2 * T;
  std::array<std::array<double, 5>, 4> m = {{
      {0.0, 0.0, 0.0, 1.0, p0},
      {0.0, 0.0, 1.0, 0.0, v0},
      {T3, T2, T, 1.0, pf},
      {6.0 * T, 2.0, 0.0, 0.0, 0.0},
  }};
  const auto x = solve4(m);

  TrajectoryPlan plan;
  plan.local = {x[3], x[2], x[1], x[0]};
  plan.t_start = t0;
  plan.t_exit = tf;
  plan.p_start = p0;
  plan.p_exit = pf;

  // Expand c3 (t-t0)^3 + c2 (t-t0)^2 + c1 (t-t0) + c0 into absolute monomials.
  const double c0 = x[3], c1 = x[2], c2 = x[1], c3 = x[0];
  plan.phi3 = c3;
  plan.phi2 = c2 - 3.0 * c3 * t0;
  plan.phi1 = c1 - 2.0 * c2 * t0 + 3.0 * c3 * t0 * t0;
  plan.phi0 = c0 - c1 * t0 + c2 * t0 * t0 - c3 * t0 * t0 * t0;
  return plan;
}

Kinematics eval_unchecked(const TrajectoryPlan& plan, double t) noexcept {
  const double tau = t - plan.t_start;
  const auto& c = plan.local;
  return {((c[3] * tau + c[2]) * tau + c[1]) * tau + c[0],
          (3.0 * c[3] * tau + 2.0 * c[2]) * tau + c[1],
          6.0 * c[3] * tau + 2.0 * c[2]};
}

Kinematics eval(const TrajectoryPlan& plan, double t) {
  if (t < plan.t_start - kWindowTol || t > plan.t_exit + kWindowTol) {
    std::ostringstream os;
    os << "time " << t << " outside plan window [" << plan.t_start << ", " << plan.t_exit << "]";
    fail(ErrorCode::domain, os.str());
  }
  return eval_unchecked(plan, t);
}

double min_speed(const TrajectoryPlan& plan) noexcept {
  const auto& c = plan.local;
  const double T = plan.horizon();
  double v = std::min(c[1], eval_unchecked(plan, plan.t_exit).speed);
  if (c[3] != 0.0) {
    const double tau = -c[2] / (3.0 * c[3]);
    if (tau > 0.0 && tau < T) v = std::min(v, eval_unchecked(plan, plan.t_start + tau).speed);
  }
  return v;
}

double crossing_time(const TrajectoryPlan& plan, double pos) {
  const double tol = 1e-9 * std::max(1.0, std::abs(plan.p_exit));
  if (pos < plan.p_start - tol || pos > plan.p_exit + tol) {
    std::ostringstream os;
    os << "position " << pos << " outside plan span [" << plan.p_start << ", " << plan.p_exit << "]";
    fail(ErrorCode::domain, os.str());
  }
  if (!(min_speed(plan) > 0.0)) fail(ErrorCode::invalid_plan, "plan speed reaches zero; position not monotone");
  if (pos <= plan.p_start) return plan.t_start;
  if (pos >= plan.p_exit) return plan.t_exit;

  double lo = plan.t_start, hi = plan.t_exit;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (eval_unchecked(plan, mid).pos < pos) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

FeasibleRange feasible_range(double p0, double v0, double pf, const ScenarioConfig& config) {
  const double d = pf - p0;
  if (!(d > 0.0)) fail(ErrorCode::domain, "feasible_range requires p0 < pf");
  const double v = std::clamp(v0, config.v_min, config.v_max);

  FeasibleRange r;
  {
    const double a = config.u_max;
    const double d_acc = (config.v_max * config.v_max - v * v) / (2.0 * a);
    if (d_acc >= d)
      r.t_lo = (-v + std::sqrt(v * v + 2.0 * a * d)) / a;
    else
      r.t_lo = (config.v_max - v) / a + (d - d_acc) / config.v_max;
  }
  {
    const double b = -config.u_min;
    const double d_dec = (v * v - config.v_min * config.v_min) / (2.0 * b);
    if (d_dec >= d)
      r.t_hi = (v - std::sqrt(std::max(0.0, v * v - 2.0 * b * d))) / b;
    else
      r.t_hi = (v - config.v_min) / b + (d - d_dec) / config.v_min;
  }
  return r;
}

}  // namespace cavsched
