#include "cavsched/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cavsched/error.hpp"

namespace cavsched {

using nlohmann::json;

const Lane* ScenarioConfig::find_lane(LaneId id) const {
  for (const auto& lane : lanes)
    if (lane.id == id) return &lane;
  return nullptr;
}

std::size_t ScenarioConfig::lane_index(LaneId id) const {
  for (std::size_t i = 0; i < lanes.size(); ++i)
    if (lanes[i].id == id) return i;
  fail(ErrorCode::config, "unknown lane id " + std::to_string(id));
}

const ConflictPoint* ScenarioConfig::conflict_between(LaneId a, LaneId b) const {
  for (const auto& cp : conflicts)
    if ((cp.lane_a == a && cp.lane_b == b) || (cp.lane_a == b && cp.lane_b == a)) return &cp;
  return nullptr;
}

ScenarioConfig default_scenario() {
  ScenarioConfig c;
  c.lanes = {
      {0, 230.0, "A-east"},
      {1, 230.0, "A-west"},
      {2, 230.0, "B-north"},
      {3, 230.0, "B-south"},
  };
  // Crossing box of ~14 m before the exit, lanes offset by ~3.5 m.
  c.conflicts = {
      {0, 0, 2, 235.0, 235.0},
      {1, 0, 3, 241.0, 235.0},
      {2, 1, 2, 235.0, 241.0},
      {3, 1, 3, 241.0, 241.0},
  };
  return c;
}

namespace {

[[noreturn]] void bad_key(const std::string& key, const std::string& why) {
  fail(ErrorCode::config, "scenario key '" + key + "': " + why);
}

}  // namespace

void validate(const ScenarioConfig& c) {
  if (c.entry_pos != 0.0) bad_key("entry_pos", "must be 0");
  if (!(c.exit_pos > c.entry_pos)) bad_key("exit_pos", "must exceed entry_pos");
  if (!(c.v_min > 0.0)) bad_key("v_min", "must be > 0");
  if (!(c.v_max > c.v_min)) bad_key("v_max", "must exceed v_min");
  if (!(c.u_min < 0.0)) bad_key("u_min", "must be < 0");
  if (!(c.u_max > 0.0)) bad_key("u_max", "must be > 0");
  if (!(c.delta_lateral > 0.0)) bad_key("delta_lateral", "must be > 0");
  if (!(c.delta_rear > 0.0)) bad_key("delta_rear", "must be > 0");
  if (!(c.d_min > 0.0)) bad_key("d_min", "must be > 0");
  if (!(c.epsilon > 0.0)) bad_key("epsilon", "must be > 0");
  if (!(c.dt_check > 0.0) || c.dt_check > c.epsilon) bad_key("dt_check", "must be in (0, epsilon]");
  if (!(c.dt_sim > 0.0)) bad_key("dt_sim", "must be > 0");
  if (c.lanes.empty()) bad_key("lanes", "at least one lane required");

  std::set<LaneId> ids;
  for (std::size_t i = 0; i < c.lanes.size(); ++i) {
    const auto& l = c.lanes[i];
    const std::string key = "lanes[" + std::to_string(i) + "]";
    if (!ids.insert(l.id).second) bad_key(key + ".id", "duplicate lane id");
    if (!(l.stop_line_pos > 0.0 && l.stop_line_pos < c.exit_pos))
      bad_key(key + ".stop_line_pos", "must lie in (0, exit_pos)");
  }
  std::set<int> cp_ids;
  std::set<std::pair<LaneId, LaneId>> pairs;
  for (std::size_t i = 0; i < c.conflicts.size(); ++i) {
    const auto& cp = c.conflicts[i];
    const std::string key = "conflicts[" + std::to_string(i) + "]";
    if (!cp_ids.insert(cp.id).second) bad_key(key + ".id", "duplicate conflict id");
    if (!ids.count(cp.lane_a)) bad_key(key + ".lane_a", "unknown lane");
    if (!ids.count(cp.lane_b)) bad_key(key + ".lane_b", "unknown lane");
    if (cp.lane_a == cp.lane_b) bad_key(key + ".lane_b", "must differ from lane_a");
    if (!(cp.pos_on_a > 0.0 && cp.pos_on_a < c.exit_pos))
      bad_key(key + ".pos_on_a", "must lie in (0, exit_pos)");
    if (!(cp.pos_on_b > 0.0 && cp.pos_on_b < c.exit_pos))
      bad_key(key + ".pos_on_b", "must lie in (0, exit_pos)");
    auto pr = std::minmax(cp.lane_a, cp.lane_b);
    if (!pairs.insert({pr.first, pr.second}).second)
      bad_key(key, "more than one conflict point for this lane pair");
  }
}

ScenarioConfig scenario_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::config, "scenario must be a JSON object");
  ScenarioConfig c = default_scenario();

  static const std::map<std::string, double ScenarioConfig::*> scalars = {
      {"entry_pos", &ScenarioConfig::entry_pos},
      {"exit_pos", &ScenarioConfig::exit_pos},
      {"v_min", &ScenarioConfig::v_min},
      {"v_max", &ScenarioConfig::v_max},
      {"u_min", &ScenarioConfig::u_min},
      {"u_max", &ScenarioConfig::u_max},
      {"delta_lateral", &ScenarioConfig::delta_lateral},
      {"delta_rear", &ScenarioConfig::delta_rear},
      {"d_min", &ScenarioConfig::d_min},
      {"epsilon", &ScenarioConfig::epsilon},
      {"dt_check", &ScenarioConfig::dt_check},
      {"dt_sim", &ScenarioConfig::dt_sim},
  };

  auto number = [](const json& v, const std::string& key) {
    if (!v.is_number()) bad_key(key, "expected a number");
    return v.get<double>();
  };
  auto integer = [](const json& v, const std::string& key) {
    if (!v.is_number_integer()) bad_key(key, "expected an integer");
    return v.get<int>();
  };

  for (const auto& [key, value] : j.items()) {
    if (auto it = scalars.find(key); it != scalars.end()) {
      c.*(it->second) = number(value, key);
    } else if (key == "lanes") {
      if (!value.is_array()) bad_key(key, "expected an array");
      c.lanes.clear();
      for (std::size_t i = 0; i < value.size(); ++i) {
        const auto& e = value[i];
        const std::string k = "lanes[" + std::to_string(i) + "]";
        if (!e.is_object()) bad_key(k, "expected an object");
        Lane l;
        for (const auto& [lk, lv] : e.items()) {
          if (lk == "id") l.id = integer(lv, k + ".id");
          else if (lk == "stop_line_pos") l.stop_line_pos = number(lv, k + ".stop_line_pos");
          else if (lk == "label") {
            if (!lv.is_string()) bad_key(k + ".label", "expected a string");
            l.label = lv.get<std::string>();
          } else bad_key(k + "." + lk, "unknown key");
        }
        if (!e.contains("id")) bad_key(k + ".id", "missing");
        if (!e.contains("stop_line_pos")) bad_key(k + ".stop_line_pos", "missing");
        c.lanes.push_back(l);
      }
    } else if (key == "conflicts") {
      if (!value.is_array()) bad_key(key, "expected an array");
      c.conflicts.clear();
      for (std::size_t i = 0; i < value.size(); ++i) {
        const auto& e = value[i];
        const std::string k = "conflicts[" + std::to_string(i) + "]";
        if (!e.is_object()) bad_key(k, "expected an object");
        ConflictPoint cp;
        for (const char* req : {"id", "lane_a", "lane_b", "pos_on_a", "pos_on_b"})
          if (!e.contains(req)) bad_key(k + "." + req, "missing");
        for (const auto& [ck, cv] : e.items()) {
          if (ck == "id") cp.id = integer(cv, k + ".id");
          else if (ck == "lane_a") cp.lane_a = integer(cv, k + ".lane_a");
          else if (ck == "lane_b") cp.lane_b = integer(cv, k + ".lane_b");
          else if (ck == "pos_on_a") cp.pos_on_a = number(cv, k + ".pos_on_a");
          else if (ck == "pos_on_b") cp.pos_on_b = number(cv, k + ".pos_on_b");
          else bad_key(k + "." + ck, "unknown key");
        }
        c.conflicts.push_back(cp);
      }
    } else {
      bad_key(key, "unknown key");
    }
  }
  validate(c);
  return c;
}

json scenario_to_json(const ScenarioConfig& c) {
  json j;
  j["entry_pos"] = c.entry_pos;
  j["exit_pos"] = c.exit_pos;
  j["v_min"] = c.v_min;
  j["v_max"] = c.v_max;
  j["u_min"] = c.u_min;
  j["u_max"] = c.u_max;
  j["delta_lateral"] = c.delta_lateral;
  j["delta_rear"] = c.delta_rear;
  j["d_min"] = c.d_min;
  j["epsilon"] = c.epsilon;
  j["dt_check"] = c.dt_check;
  j["dt_sim"] = c.dt_sim;
  j["lanes"] = json::array();
  for (const auto& l : c.lanes)
    j["lanes"].push_back({{"id", l.id}, {"stop_line_pos", l.stop_line_pos}, {"label", l.label}});
  j["conflicts"] = json::array();
  for (const auto& cp : c.conflicts)
    j["conflicts"].push_back({{"id", cp.id},
                              {"lane_a", cp.lane_a},
                              {"lane_b", cp.lane_b},
                              {"pos_on_a", cp.pos_on_a},
                              {"pos_on_b", cp.pos_on_b}});
  return j;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read scenario file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::config, path.string() + ": " + e.what());
  }
  try {
    return scenario_from_json(j);
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

CoordGraph build_graph(const std::vector<VehicleState>& states, const ScenarioConfig& config) {
  CoordGraph g;
  std::set<VehicleId> seen;
  for (const auto& s : states) {
    if (!config.find_lane(s.lane))
      fail(ErrorCode::config, "vehicle " + std::to_string(s.vid) + " on unknown lane " +
                                  std::to_string(s.lane));
    if (!seen.insert(s.vid).second)
      fail(ErrorCode::config, "duplicate vehicle id " + std::to_string(s.vid));
  }
  g.nodes.assign(seen.begin(), seen.end());

  std::set<std::pair<VehicleId, VehicleId>> edges;
  auto add = [&](VehicleId a, VehicleId b) { edges.insert(std::minmax(a, b)); };

  // Rear-end pairs: consecutive vehicles per lane. Ties in position fall back
  // to vid so the order does not depend on input order.
  std::map<LaneId, std::vector<const VehicleState*>> by_lane;
  for (const auto& s : states) by_lane[s.lane].push_back(&s);
  for (auto& [lane, vs] : by_lane) {
    std::sort(vs.begin(), vs.end(), [](const VehicleState* a, const VehicleState* b) {
      return a->pos != b->pos ? a->pos < b->pos : a->vid < b->vid;
    });
    for (std::size_t i = 1; i < vs.size(); ++i) add(vs[i - 1]->vid, vs[i]->vid);
  }

  for (std::size_t i = 0; i < states.size(); ++i)
    for (std::size_t k = i + 1; k < states.size(); ++k)
      if (states[i].lane != states[k].lane &&
          config.conflict_between(states[i].lane, states[k].lane))
        add(states[i].vid, states[k].vid);

  g.edges.assign(edges.begin(), edges.end());
  return g;
}

}  // namespace cavsched
