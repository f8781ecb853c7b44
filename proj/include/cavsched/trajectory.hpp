#pragma once

#include <array>

#include "cavsched/scenario.hpp"

namespace cavsched {

// Unconstrained energy-optimal motion: p(t) = phi3 t^3 + phi2 t^2 + phi1 t + phi0
// on [t_start, t_exit], with p(t_start) = p_start, v(t_start) = v0,
// p(t_exit) = p_exit and u(t_exit) = 0.
//
// phi* are in absolute time. Evaluation goes through `local`, the same cubic
// expanded about t_start, because absolute times late in a run make the
// absolute-time monomials cancel badly.
struct TrajectoryPlan {
  double phi3 = 0.0;
  double phi2 = 0.0;
  double phi1 = 0.0;
  double phi0 = 0.0;
  double t_start = 0.0;
  double t_exit = 0.0;
  double p_start = 0.0;
  double p_exit = 0.0;
  std::array<double, 4> local{};  // c0..c3 in tau = t - t_start

  double horizon() const { return t_exit - t_start; }
};

struct Kinematics {
  double pos = 0.0;
  double speed = 0.0;
  double accel = 0.0;
};

struct FeasibleRange {
  double t_lo = 0.0;
  double t_hi = 0.0;
};

TrajectoryPlan solve_coefficients(double t0, double p0, double v0, double tf, double pf);

// Throws Error(domain) outside [t_start, t_exit].
Kinematics eval(const TrajectoryPlan& plan, double t);
// No window check; used for sampling loops that already clamp.
Kinematics eval_unchecked(const TrajectoryPlan& plan, double t) noexcept;

// Smallest speed on the validity window.
double min_speed(const TrajectoryPlan& plan) noexcept;

// Time at which the plan reaches `pos`, by bisection.
double crossing_time(const TrajectoryPlan& plan, double pos);

// Kinematic travel-time bounds from (p0, v0) to pf: fastest is full throttle
// to v_max then cruise, slowest is full braking to v_min then crawl. Durations,
// not absolute times. v0 is clamped into [v_min, v_max].
FeasibleRange feasible_range(double p0, double v0, double pf, const ScenarioConfig& config);

}  // namespace cavsched
