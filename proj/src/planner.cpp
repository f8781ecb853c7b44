#include "cavsched/planner.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <tuple>

#include "cavsched/error.hpp"

namespace cavsched {

const VehicleState& PlanningInstance::state(VehicleId vid) const {
  for (const auto& s : states)
    if (s.vid == vid) return s;
  fail(ErrorCode::internal, "vehicle " + std::to_string(vid) + " not in instance");
}

const FeasibleRange& PlanningInstance::range(VehicleId vid) const {
  auto it = ranges.find(vid);
  if (it == ranges.end()) fail(ErrorCode::internal, "no feasible range for vehicle " + std::to_string(vid));
  return it->second;
}

PlanningInstance make_instance(double time_now, std::vector<VehicleState> states, const ScenarioConfig& config,
                               std::vector<CrossingRecord> crossings) {
  PlanningInstance inst;
  inst.time_now = time_now;
  inst.graph = build_graph(states, config);
  for (const auto& s : states) {
    const auto r = feasible_range(s.pos, s.speed, config.exit_pos, config);
    inst.ranges[s.vid] = {time_now + r.t_lo, time_now + r.t_hi};
  }
  inst.states = std::move(states);
  inst.committed_crossings = std::move(crossings);
  return inst;
}

std::vector<VehicleId> decision_sequence(const PlanningInstance& inst) {
  std::vector<std::tuple<double, double, VehicleId>> keys;
  keys.reserve(inst.states.size());
  for (const auto& s : inst.states) {
    const auto& r = inst.range(s.vid);
    keys.emplace_back(r.t_lo, r.t_hi, s.vid);
  }
  std::sort(keys.begin(), keys.end());
  std::vector<VehicleId> seq;
  seq.reserve(keys.size());
  for (const auto& k : keys) seq.push_back(std::get<2>(k));
  return seq;
}

CandidateEval evaluate_candidate(VehicleId vid, double t_exit, const PlanningInstance& inst,
                                 std::span<const CommittedPlan> committed, const ScenarioConfig& config) {
  const auto& s = inst.state(vid);
  CommittedPlan cand;
  cand.vid = vid;
  cand.lane = s.lane;
  cand.plan = solve_coefficients(inst.time_now, s.pos, s.speed, t_exit, config.exit_pos);
  if (auto it = inst.history.find(vid); it != inst.history.end()) cand.history = it->second;
  CandidateEval ev;
  ev.report = check_all(cand, committed, inst.committed_crossings, config);
  ev.monotone = min_speed(cand.plan) > 0.0;
  ev.plan = std::move(cand.plan);
  return ev;
}

namespace {

// Keeps the least-violating candidate, preferring plans that keep moving.
struct FallbackTracker {
  bool have = false;
  double t_exit = 0.0;
  CandidateEval best;

  void offer(double t, CandidateEval ev) {
    if (!have || (ev.monotone && !best.monotone) ||
        (ev.monotone == best.monotone && ev.report.worst_violation < best.report.worst_violation)) {
      have = true;
      t_exit = t;
      best = std::move(ev);
    }
  }
};

}  // namespace

SolveResult solve_exit_time_scan(VehicleId vid, const PlanningInstance& inst,
                                 std::span<const CommittedPlan> committed, const ScenarioConfig& config) {
  const auto& range = inst.range(vid);
  SolveResult res;
  res.vid = vid;
  FallbackTracker fallback;

  const double eps = config.epsilon;
  const auto steps = static_cast<long>(std::floor((range.t_hi - range.t_lo) / eps + 1e-9));
  for (long k = 0; k <= steps; ++k) {
    const double t = range.t_lo + static_cast<double>(k) * eps;
    auto ev = evaluate_candidate(vid, t, inst, committed, config);
    ++res.iterations;
    if (ev.report.feasible) {
      res.t_exit = t;
      res.plan = std::move(ev.plan);
      res.feasible = true;
      return res;
    }
    fallback.offer(t, std::move(ev));
  }

  if (auto it = inst.previous_exit.find(vid); it != inst.previous_exit.end()) {
    const double t = it->second;
    if (t > inst.time_now && t >= range.t_lo - 1e-9 && t <= range.t_hi + 1e-9) {
      auto ev = evaluate_candidate(vid, t, inst, committed, config);
      ++res.iterations;
      if (ev.report.feasible) {
        res.t_exit = t;
        res.plan = std::move(ev.plan);
        res.feasible = true;
        res.from_previous = true;
        return res;
      }
    }
  }

  if (!fallback.have) fail(ErrorCode::internal, "empty candidate grid for vehicle " + std::to_string(vid));
  res.t_exit = fallback.t_exit;
  res.plan = std::move(fallback.best.plan);
  res.feasible = false;
  res.violation = fallback.best.report.worst_violation;
  res.first_violated = fallback.best.report.first_violated;
  return res;
}

CommittedPlan to_committed(const PlanningInstance& inst, const SolveResult& r) {
  CommittedPlan cp;
  cp.vid = r.vid;
  cp.lane = inst.state(r.vid).lane;
  cp.plan = r.plan;
  if (auto it = inst.history.find(r.vid); it != inst.history.end()) cp.history = it->second;
  return cp;
}

SolveMap solve_in_sequence(const PlanningInstance& inst, const ScenarioConfig& /*config*/, const VehicleSolver& solver,
                           std::span<const CommittedPlan> fixed, const std::vector<VehicleId>& subset) {
  std::vector<CommittedPlan> committed(fixed.begin(), fixed.end());
  SolveMap out;
  for (VehicleId vid : decision_sequence(inst)) {
    if (!subset.empty() && std::find(subset.begin(), subset.end(), vid) == subset.end()) continue;
    SolveResult r;
    try {
      r = solver(vid, inst, committed);
    } catch (const Error& e) {
      r = {};
      r.vid = vid;
      r.error = e.what();
      out[vid] = std::move(r);
      continue;
    }
    committed.push_back(to_committed(inst, r));
    out[vid] = std::move(r);
  }
  return out;
}

SolveMap cooperative_replan(const PlanningInstance& inst, const ScenarioConfig& config) {
  return solve_in_sequence(inst, config,
                           [&](VehicleId vid, const PlanningInstance& i, std::span<const CommittedPlan> c) {
                             return solve_exit_time_scan(vid, i, c, config);
                           });
}

std::vector<SafetyIssue> joint_safety_replay(const PlanningInstance& inst, const SolveMap& results,
                                             const ScenarioConfig& config) {
  std::vector<CommittedPlan> plans;
  std::vector<bool> ok;
  for (const auto& [vid, r] : results) {
    plans.push_back(to_committed(inst, r));
    ok.push_back(r.feasible && r.error.empty());
  }
  std::vector<SafetyIssue> issues;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    if (!ok[i]) continue;
    const auto& p = plans[i];
    const double p0 = p.plan.p_start;
    // Same-lane neighbours are taken from all plans; an infeasible one in
    // between shields the pair behind it.
    std::optional<std::size_t> lead, foll;
    std::vector<CommittedPlan> others;
    for (std::size_t j = 0; j < plans.size(); ++j) {
      if (j == i) continue;
      const auto& o = plans[j];
      if (o.lane != p.lane) {
        if (ok[j]) others.push_back(o);
        continue;
      }
      const double q = o.plan.p_start;
      if (q != p0 ? q > p0 : o.vid < p.vid) {
        if (!lead || q < plans[*lead].plan.p_start) lead = j;
      } else if (!foll || q > plans[*foll].plan.p_start) {
        foll = j;
      }
    }
    if (lead && ok[*lead]) others.push_back(plans[*lead]);
    if (foll && ok[*foll]) others.push_back(plans[*foll]);
    auto rep = check_all(p, others, inst.committed_crossings, config);
    if (!rep.feasible) issues.push_back({p.vid, rep});
  }
  return issues;
}

}  // namespace cavsched
