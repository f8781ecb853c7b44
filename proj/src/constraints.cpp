#include "cavsched/constraints.hpp"

#include <algorithm>
#include <cmath>

#include "cavsched/error.hpp"

namespace cavsched {

namespace {

constexpr double kBoundTol = 1e-9;
constexpr double kGapTimeTol = 1e-6;
constexpr double kGapDistTol = 1e-9;

void note(ConstraintReport& r, Violation v, double amount) {
  if (amount <= 0.0) return;
  r.feasible = false;
  r.worst_violation = std::max(r.worst_violation, amount);
  if (r.first_violated == Violation::none || static_cast<int>(v) < static_cast<int>(r.first_violated))
    r.first_violated = v;
}

// Sample times lo, lo + dt, ..., always ending exactly at hi.
template <class F>
void for_each_sample(double lo, double hi, double dt, F&& f) {
  if (hi < lo) return;
  const auto n = static_cast<long>(std::floor((hi - lo) / dt + 1e-9));
  for (long j = 0; j <= n; ++j) {
    const double t = lo + static_cast<double>(j) * dt;
    if (t < hi - 1e-12) f(t);
  }
  f(hi);
}

}  // namespace

std::string_view to_string(Violation v) {
  switch (v) {
    case Violation::none: return "none";
    case Violation::input: return "input";
    case Violation::speed: return "speed";
    case Violation::lateral: return "lateral";
    case Violation::rear_end: return "rear_end";
  }
  return "?";
}

ConstraintReport combine(std::initializer_list<ConstraintReport> reports) {
  ConstraintReport out;
  for (const auto& r : reports)
    if (!r.feasible) note(out, r.first_violated, r.worst_violation);
  return out;
}

double position_at(const CommittedPlan& cp, double t) {
  const auto& plan = cp.plan;
  if (t >= plan.t_start) return eval_unchecked(plan, std::min(t, plan.t_exit)).pos;
  const auto& h = cp.history;
  if (h.empty() || t <= h.front().t) return h.empty() ? plan.p_start : h.front().pos;
  if (t >= h.back().t) {
    // Between the last recorded sample and the plan epoch.
    const double t1 = plan.t_start, t0 = h.back().t;
    if (t1 - t0 <= 0.0) return plan.p_start;
    const double w = (t - t0) / (t1 - t0);
    return h.back().pos + w * (plan.p_start - h.back().pos);
  }
  auto it = std::lower_bound(h.begin(), h.end(), t, [](const PosSample& s, double x) { return s.t < x; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double w = (t - a.t) / (b.t - a.t);
  return a.pos + w * (b.pos - a.pos);
}

ConstraintReport check_bounds(const TrajectoryPlan& plan, const ScenarioConfig& c) {
  ConstraintReport r;
  const double du = c.u_max - c.u_min;
  const double dv = c.v_max - c.v_min;

  // Acceleration is linear in t: the endpoints bound it.
  for (double t : {plan.t_start, plan.t_exit}) {
    const double u = eval_unchecked(plan, t).accel;
    note(r, Violation::input, (u - c.u_max - kBoundTol) > 0.0 ? (u - c.u_max) / du : 0.0);
    note(r, Violation::input, (c.u_min - u - kBoundTol) > 0.0 ? (c.u_min - u) / du : 0.0);
  }
  double worst_speed = 0.0;
  for_each_sample(plan.t_start, plan.t_exit, c.dt_check, [&](double t) {
    const double v = eval_unchecked(plan, t).speed;
    if (v - c.v_max > kBoundTol) worst_speed = std::max(worst_speed, (v - c.v_max) / dv);
    if (c.v_min - v > kBoundTol) worst_speed = std::max(worst_speed, (c.v_min - v) / dv);
  });
  note(r, Violation::speed, worst_speed);
  return r;
}

ConstraintReport check_lateral(const CommittedPlan& cand, std::span<const CommittedPlan> others,
                               std::span<const CrossingRecord> crossings, const ScenarioConfig& c) {
  ConstraintReport r;
  const auto& plan = cand.plan;
  const double pos_tol = 1e-9 * std::max(1.0, c.exit_pos);
  for (const auto& cp : c.conflicts) {
    if (!cp.involves(cand.lane)) continue;
    const double phi = cp.pos_on(cand.lane);
    if (phi < plan.p_start - pos_tol) continue;  // already crossed
    if (phi > plan.p_exit + pos_tol)
      fail(ErrorCode::domain, "conflict point " + std::to_string(cp.id) + " beyond candidate plan");
    const double t_self = crossing_time(plan, phi);
    const LaneId other_lane = cp.other(cand.lane);
    const double phi_other = cp.pos_on(other_lane);

    auto gap_check = [&](double t_other) {
      const double gap = std::abs(t_self - t_other);
      if (gap < c.delta_lateral - kGapTimeTol) note(r, Violation::lateral, (c.delta_lateral - gap) / c.delta_lateral);
    };

    for (const auto& o : others) {
      if (o.lane != other_lane || o.vid == cand.vid) continue;
      if (phi_other >= o.plan.p_start - pos_tol && phi_other <= o.plan.p_exit + pos_tol)
        gap_check(crossing_time(o.plan, phi_other));
    }
    for (const auto& rec : crossings) {
      if (rec.conflict != cp.id || rec.lane != other_lane || rec.vid == cand.vid) continue;
      // A committed plan that still spans the point already supplied its time.
      const bool planned = std::any_of(others.begin(), others.end(), [&](const CommittedPlan& o) {
        return o.vid == rec.vid && phi_other >= o.plan.p_start - pos_tol && phi_other <= o.plan.p_exit + pos_tol;
      });
      if (!planned) gap_check(rec.time);
    }
  }
  return r;
}

namespace {

ConstraintReport rear_gap(const CommittedPlan& pred, const CommittedPlan& foll, const ScenarioConfig& c) {
  ConstraintReport r;
  const double lo = std::max(foll.plan.t_start, pred.plan.t_start);
  const double hi = std::min(pred.plan.t_exit, foll.plan.t_exit);
  double worst = 0.0;
  for_each_sample(lo, hi, c.dt_check, [&](double t) {
    const double gap = position_at(pred, t - c.delta_rear) - eval_unchecked(foll.plan, t).pos;
    if (c.d_min - gap > kGapDistTol) worst = std::max(worst, (c.d_min - gap) / c.d_min);
  });
  note(r, Violation::rear_end, worst);
  return r;
}

}  // namespace

ConstraintReport check_rear_end(const CommittedPlan& follower, const CommittedPlan* pred, const ScenarioConfig& c) {
  if (!pred) return {};
  if (pred->lane != follower.lane) fail(ErrorCode::ordering, "rear-end predecessor on a different lane");
  if (position_at(*pred, follower.plan.t_start) < follower.plan.p_start)
    fail(ErrorCode::ordering, "predecessor " + std::to_string(pred->vid) + " is behind vehicle " +
                                  std::to_string(follower.vid));
  return rear_gap(*pred, follower, c);
}

ConstraintReport check_all(const CommittedPlan& cand, std::span<const CommittedPlan> committed,
                           std::span<const CrossingRecord> crossings, const ScenarioConfig& c) {
  const ConstraintReport bounds = check_bounds(cand.plan, c);
  // Lateral and rear-end tests need a monotone position; a plan that stops
  // already carries a speed violation.
  if (!(min_speed(cand.plan) > 0.0)) return bounds;

  const ConstraintReport lateral = check_lateral(cand, committed, crossings, c);

  const double t0 = cand.plan.t_start;
  const double p0 = cand.plan.p_start;
  const CommittedPlan* leader = nullptr;
  const CommittedPlan* follower = nullptr;
  double leader_pos = 0.0, follower_pos = 0.0;
  for (const auto& o : committed) {
    if (o.lane != cand.lane || o.vid == cand.vid) continue;
    if (o.plan.t_exit < t0) continue;
    const double p = position_at(o, t0);
    const bool ahead = p != p0 ? p > p0 : o.vid < cand.vid;
    if (ahead) {
      if (!leader || p < leader_pos) leader = &o, leader_pos = p;
    } else {
      if (!follower || p > follower_pos) follower = &o, follower_pos = p;
    }
  }
  ConstraintReport rear;
  if (leader) rear = combine({rear, rear_gap(*leader, cand, c)});
  if (follower) rear = combine({rear, rear_gap(cand, *follower, c)});
  return combine({bounds, lateral, rear});
}

}  // namespace cavsched
