#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cavsched/constraints.hpp"
#include "cavsched/scenario.hpp"
#include "cavsched/trajectory.hpp"

namespace cavsched {

// Everything one cooperative solve at time_now needs.
struct PlanningInstance {
  double time_now = 0.0;
  std::vector<VehicleState> states;
  CoordGraph graph;
  std::map<VehicleId, FeasibleRange> ranges;  // absolute exit times
  std::vector<CrossingRecord> committed_crossings;
  // Executed positions before time_now, for rear-end look-back.
  std::map<VehicleId, std::vector<PosSample>> history;
  // Exit time of each vehicle's current plan. Tried after the grid comes up
  // empty, since that plan continues the vehicle's actual motion.
  std::map<VehicleId, double> previous_exit;

  const VehicleState& state(VehicleId vid) const;
  const FeasibleRange& range(VehicleId vid) const;
};

// Builds graph and absolute ranges from the states.
PlanningInstance make_instance(double time_now, std::vector<VehicleState> states, const ScenarioConfig& config,
                               std::vector<CrossingRecord> crossings = {});

struct SolveResult {
  VehicleId vid = 0;
  double t_exit = 0.0;
  TrajectoryPlan plan;
  bool feasible = false;
  int iterations = 0;  // candidate exit times whose constraints were evaluated
  double violation = 0.0;
  Violation first_violated = Violation::none;
  bool from_previous = false;  // kept the previous plan's exit time
  std::string error;           // non-empty if the solve threw
};

using SolveMap = std::map<VehicleId, SolveResult>;

// Ascending (t_lo, t_hi), ties by vid.
std::vector<VehicleId> decision_sequence(const PlanningInstance& instance);

// Builds the candidate trajectory for one exit time and evaluates every
// constraint against `committed`.
struct CandidateEval {
  TrajectoryPlan plan;
  ConstraintReport report;
  bool monotone = true;
};
CandidateEval evaluate_candidate(VehicleId vid, double t_exit, const PlanningInstance& instance,
                                 std::span<const CommittedPlan> committed, const ScenarioConfig& config);

// Scan t_lo, t_lo + eps, ... up to t_hi and return the first feasible
// candidate; otherwise the previous exit time if still feasible, otherwise the
// least-violating candidate.
SolveResult solve_exit_time_scan(VehicleId vid, const PlanningInstance& instance,
                                 std::span<const CommittedPlan> committed, const ScenarioConfig& config);

using VehicleSolver =
    std::function<SolveResult(VehicleId, const PlanningInstance&, std::span<const CommittedPlan>)>;

// Sequential driver: solves `subset` (all vehicles if empty) in decision
// order, each seeing `fixed` plus the plans committed before it. Errors are
// captured per vehicle.
SolveMap solve_in_sequence(const PlanningInstance& instance, const ScenarioConfig& config,
                           const VehicleSolver& solver, std::span<const CommittedPlan> fixed = {},
                           const std::vector<VehicleId>& subset = {});

SolveMap cooperative_replan(const PlanningInstance& instance, const ScenarioConfig& config);

CommittedPlan to_committed(const PlanningInstance& instance, const SolveResult& result);

struct SafetyIssue {
  VehicleId vid = 0;
  ConstraintReport report;
};

// Re-checks every feasible result against all other feasible results,
// regardless of sequence. Rear-end pairs are the immediate same-lane
// neighbours among all results; a pair split by an infeasible vehicle is not
// checked.
std::vector<SafetyIssue> joint_safety_replay(const PlanningInstance& instance, const SolveMap& results,
                                             const ScenarioConfig& config);

}  // namespace cavsched
