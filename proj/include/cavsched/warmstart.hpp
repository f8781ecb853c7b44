#pragma once

#include <deque>
#include <map>
#include <span>

#include "cavsched/gnn.hpp"
#include "cavsched/planner.hpp"

namespace cavsched {

// Search outward from a predicted exit time: the queue starts as
// {t_hat, t_hat - eps, t_hat + eps}; each infeasible candidate below t_hat
// queues the next lower one, each above queues the next higher one. Seeds
// outside [t_lo, t_hi] are dropped, as are repeats.
SolveResult solve_warmstart(VehicleId vid, const PlanningInstance& instance, std::span<const CommittedPlan> committed,
                            double t_hat, const ScenarioConfig& config);

// Sequential warm-started solve with externally supplied predictions.
SolveMap cooperative_replan_warmstart(const PlanningInstance& instance, const std::map<VehicleId, double>& t_hat,
                                      const ScenarioConfig& config);

// One batched GNN prediction, then the sequential warm-started solve.
SolveMap cooperative_replan_warmstart(const PlanningInstance& instance, const SageModel& model,
                                      const ScenarioConfig& config);

}  // namespace cavsched
