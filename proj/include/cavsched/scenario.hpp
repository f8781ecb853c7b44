#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace cavsched {

using VehicleId = int;
using LaneId = int;

struct Lane {
  LaneId id = 0;
  double stop_line_pos = 0.0;  // kept for geometry completeness, unused by the planner
  std::string label;
};

// Intersection of two lane paths; positions are measured along each lane from
// the control-zone entry.
struct ConflictPoint {
  int id = 0;
  LaneId lane_a = 0;
  LaneId lane_b = 0;
  double pos_on_a = 0.0;
  double pos_on_b = 0.0;

  bool involves(LaneId lane) const { return lane == lane_a || lane == lane_b; }
  double pos_on(LaneId lane) const { return lane == lane_a ? pos_on_a : pos_on_b; }
  LaneId other(LaneId lane) const { return lane == lane_a ? lane_b : lane_a; }
};

struct ScenarioConfig {
  double entry_pos = 0.0;
  double exit_pos = 250.0;
  double v_min = 1.0;
  double v_max = 20.0;
  double u_min = -4.0;
  double u_max = 3.0;
  double delta_lateral = 2.0;  // s, min time gap at a conflict point
  double delta_rear = 1.5;     // s, rear-end time headway
  double d_min = 10.0;         // m, standstill distance
  std::vector<Lane> lanes;
  std::vector<ConflictPoint> conflicts;
  double epsilon = 0.1;   // exit-time search step
  double dt_check = 0.1;  // constraint sampling step
  double dt_sim = 0.1;

  const Lane* find_lane(LaneId id) const;
  // Index of the lane in `lanes`, used for one-hot encoding. Throws on unknown id.
  std::size_t lane_index(LaneId id) const;
  const ConflictPoint* conflict_between(LaneId a, LaneId b) const;
};

struct VehicleState {
  VehicleId vid = 0;
  LaneId lane = 0;
  double pos = 0.0;
  double speed = 0.0;
  double entry_time = 0.0;
};

struct CoordGraph {
  std::vector<VehicleId> nodes;
  std::vector<std::pair<VehicleId, VehicleId>> edges;  // (smaller vid, larger vid), sorted
};

// Four-lane crossing: lanes 0,1 on road A and 2,3 on road B, each A lane
// crossing each B lane once near the zone exit.
ScenarioConfig default_scenario();

// Throws Error(config) naming the first key whose invariant fails.
void validate(const ScenarioConfig& config);

ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& config);
ScenarioConfig load_scenario(const std::filesystem::path& path);

// Edges join same-lane neighbours in position order and every pair of
// vehicles whose lanes share a conflict point.
CoordGraph build_graph(const std::vector<VehicleState>& states, const ScenarioConfig& config);

}  // namespace cavsched
