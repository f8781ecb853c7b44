#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cavsched/scenario.hpp"
#include "cavsched/trajectory.hpp"

namespace cavsched {

struct PosSample {
  double t = 0.0;
  double pos = 0.0;
};

// A vehicle's fixed motion for the current solve. `history` holds executed
// positions before plan.t_start (ascending in t) so rear-end queries at
// t - delta_rear can look into the past; without it such queries clamp to the
// plan epoch.
struct CommittedPlan {
  VehicleId vid = 0;
  LaneId lane = 0;
  TrajectoryPlan plan;
  std::vector<PosSample> history;
};

// Time a vehicle actually crossed a conflict point.
struct CrossingRecord {
  VehicleId vid = 0;
  LaneId lane = 0;
  int conflict = 0;
  double time = 0.0;
};

enum class Violation { none, input, speed, lateral, rear_end };

std::string_view to_string(Violation v);

struct ConstraintReport {
  bool feasible = true;
  double worst_violation = 0.0;  // normalized, 0 when feasible
  Violation first_violated = Violation::none;
};

// Position of a committed vehicle at any t <= plan.t_exit, using history
// before the plan epoch and clamping earlier than that.
double position_at(const CommittedPlan& cp, double t);

ConstraintReport check_bounds(const TrajectoryPlan& plan, const ScenarioConfig& config);

// Gap rule at shared conflict points against committed plans and recorded
// crossings of vehicles already past a point.
ConstraintReport check_lateral(const CommittedPlan& candidate, std::span<const CommittedPlan> others,
                               std::span<const CrossingRecord> crossings, const ScenarioConfig& config);

inline ConstraintReport check_lateral(const CommittedPlan& candidate, std::span<const CommittedPlan> others,
                                      const ScenarioConfig& config) {
  return check_lateral(candidate, others, {}, config);
}

// p_pred(t - delta_rear) - p_follower(t) >= d_min over the overlap of the two
// windows, ending at the predecessor's exit.
ConstraintReport check_rear_end(const CommittedPlan& follower, const CommittedPlan* predecessor,
                                const ScenarioConfig& config);

// Bounds, lateral and rear-end in one pass. The rear-end rule is applied with
// the candidate as follower of its nearest committed leader and as leader of
// its nearest committed follower on the same lane.
ConstraintReport check_all(const CommittedPlan& candidate, std::span<const CommittedPlan> committed,
                           std::span<const CrossingRecord> crossings, const ScenarioConfig& config);

// Merge reports: max violation, first failing category in the order
// input, speed, lateral, rear_end.
ConstraintReport combine(std::initializer_list<ConstraintReport> reports);

}  // namespace cavsched
