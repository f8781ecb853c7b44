#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include <json.hpp>

#include "cavsched/gnn.hpp"
#include "cavsched/planner.hpp"

namespace cavsched {

// Frozen traffic state for one-shot planning.
struct Snapshot {
  double time_now = 0.0;
  std::vector<VehicleState> vehicles;
  std::vector<CrossingRecord> crossings;
};

Snapshot snapshot_from_json(const nlohmann::json& j);
nlohmann::json snapshot_to_json(const Snapshot& s);
Snapshot load_snapshot(const std::filesystem::path& path);

// Grid scan and warm start side by side for one vehicle.
struct PlanComparison {
  VehicleId vid = 0;
  LaneId lane = 0;
  FeasibleRange range;
  double t_hat = 0.0;
  SolveResult scan;
  SolveResult warm;
  double gap() const { return warm.t_exit - scan.t_exit; }
};

// Both algorithms run the full cooperative sequence independently. t_hat
// comes from `overrides`, else the model, else t_lo.
std::vector<PlanComparison> compare_solvers(const Snapshot& snapshot, const ScenarioConfig& config,
                                            const SageModel* model, const std::map<VehicleId, double>& overrides);

}  // namespace cavsched
