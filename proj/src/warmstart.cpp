#include "cavsched/warmstart.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cavsched/error.hpp"

namespace cavsched {

namespace {

constexpr double kTol = 1e-9;

}

SolveResult solve_warmstart(VehicleId vid, const PlanningInstance& inst, std::span<const CommittedPlan> committed,
                            double t_hat, const ScenarioConfig& config) {
  const auto& range = inst.range(vid);
  const double eps = config.epsilon;
  t_hat = std::clamp(t_hat, range.t_lo, range.t_hi);

  // Candidates are t_hat + j * eps, tracked by j so repeats compare exactly.
  auto at = [&](long j) { return t_hat + static_cast<double>(j) * eps; };
  auto in_range = [&](long j) { return at(j) >= range.t_lo - kTol && at(j) <= range.t_hi + kTol; };

  std::deque<long> queue;
  std::set<long> seen;
  auto push = [&](long j) {
    if (in_range(j) && seen.insert(j).second) queue.push_back(j);
  };
  push(0);
  push(-1);
  push(1);

  SolveResult res;
  res.vid = vid;
  bool have_best = false;
  double best_t = 0.0;
  CandidateEval best;

  while (!queue.empty()) {
    const long j = queue.front();
    queue.pop_front();
    const double t = at(j);
    auto ev = evaluate_candidate(vid, t, inst, committed, config);
    ++res.iterations;
    if (ev.report.feasible) {
      res.t_exit = t;
      res.plan = std::move(ev.plan);
      res.feasible = true;
      return res;
    }
    if (j < 0 && t - eps >= range.t_lo - kTol) push(j - 1);
    else if (j > 0 && t + eps <= range.t_hi + kTol) push(j + 1);

    if (!have_best || (ev.monotone && !best.monotone) ||
        (ev.monotone == best.monotone && (ev.report.worst_violation < best.report.worst_violation ||
                                          (ev.report.worst_violation == best.report.worst_violation && t < best_t)))) {
      have_best = true;
      best_t = t;
      best = std::move(ev);
    }
  }

  if (auto it = inst.previous_exit.find(vid); it != inst.previous_exit.end()) {
    const double t = it->second;
    if (t > inst.time_now && t >= range.t_lo - kTol && t <= range.t_hi + kTol) {
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

  if (!have_best) fail(ErrorCode::internal, "warm-start queue empty for vehicle " + std::to_string(vid));
  res.t_exit = best_t;
  res.plan = std::move(best.plan);
  res.violation = best.report.worst_violation;
  res.first_violated = best.report.first_violated;
  return res;
}

SolveMap cooperative_replan_warmstart(const PlanningInstance& inst, const std::map<VehicleId, double>& t_hat,
                                      const ScenarioConfig& config) {
  return solve_in_sequence(inst, config,
                           [&](VehicleId vid, const PlanningInstance& i, std::span<const CommittedPlan> c) {
                             auto it = t_hat.find(vid);
                             if (it == t_hat.end())
                               fail(ErrorCode::internal, "no exit-time prediction for vehicle " + std::to_string(vid));
                             return solve_warmstart(vid, i, c, it->second, config);
                           });
}

SolveMap cooperative_replan_warmstart(const PlanningInstance& inst, const SageModel& model,
                                      const ScenarioConfig& config) {
  return cooperative_replan_warmstart(inst, predict_exit_times(model, inst, config), config);
}

}  // namespace cavsched
