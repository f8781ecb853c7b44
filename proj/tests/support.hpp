#pragma once

#include <algorithm>
#include <vector>

#include "cavsched/planner.hpp"
#include "cavsched/rng.hpp"

namespace cavsched::testing {

// Up to max_n vehicles spread over the default lanes, same-lane vehicles at
// least `spacing` metres apart.
inline PlanningInstance random_instance(Rng& rng, const ScenarioConfig& c, int max_n = 8, double spacing = 12.0) {
  const int n = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(max_n)));
  const double t0 = rng.uniform(0.0, 500.0);
  std::vector<VehicleState> states;
  for (int i = 0; i < n; ++i) {
    for (int attempt = 0; attempt < 50; ++attempt) {
      VehicleState s;
      s.vid = i + 1;
      s.lane = c.lanes[rng.index(c.lanes.size())].id;
      s.pos = rng.uniform(0.0, 200.0);
      s.speed = rng.uniform(3.0, 20.0);
      s.entry_time = t0;
      const bool clear = std::none_of(states.begin(), states.end(), [&](const VehicleState& o) {
        return o.lane == s.lane && std::abs(o.pos - s.pos) < spacing;
      });
      if (clear) {
        states.push_back(s);
        break;
      }
    }
  }
  return make_instance(t0, states, c);
}

}  // namespace cavsched::testing
