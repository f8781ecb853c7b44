#include "cavsched/snapshot.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "cavsched/error.hpp"
#include "cavsched/warmstart.hpp"

namespace cavsched {

namespace {

template <class T>
T field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) fail(ErrorCode::format, where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::format, where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

Snapshot snapshot_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::format, "snapshot: expected an object");
  Snapshot s;
  s.time_now = field<double>(j, "time_now", "snapshot");
  const auto vs = field<nlohmann::json>(j, "vehicles", "snapshot");
  if (!vs.is_array()) fail(ErrorCode::format, "snapshot: 'vehicles' must be an array");
  std::set<VehicleId> seen;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const std::string where = "vehicles[" + std::to_string(i) + "]";
    VehicleState v;
    v.vid = field<int>(vs[i], "vid", where);
    v.lane = field<int>(vs[i], "lane", where);
    v.pos = field<double>(vs[i], "pos", where);
    v.speed = field<double>(vs[i], "speed", where);
    v.entry_time = vs[i].value("entry_time", s.time_now);
    if (!seen.insert(v.vid).second) fail(ErrorCode::format, where + ": duplicate vid " + std::to_string(v.vid));
    s.vehicles.push_back(v);
  }
  if (j.contains("crossings")) {
    const auto& cs = j.at("crossings");
    if (!cs.is_array()) fail(ErrorCode::format, "snapshot: 'crossings' must be an array");
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const std::string where = "crossings[" + std::to_string(i) + "]";
      s.crossings.push_back({field<int>(cs[i], "vid", where), field<int>(cs[i], "lane", where),
                             field<int>(cs[i], "conflict", where), field<double>(cs[i], "time", where)});
    }
  }
  for (const auto& [key, _] : j.items())
    if (key != "time_now" && key != "vehicles" && key != "crossings")
      fail(ErrorCode::format, "snapshot: unknown field '" + key + "'");
  return s;
}

nlohmann::json snapshot_to_json(const Snapshot& s) {
  nlohmann::json vs = nlohmann::json::array();
  for (const auto& v : s.vehicles)
    vs.push_back({{"vid", v.vid}, {"lane", v.lane}, {"pos", v.pos}, {"speed", v.speed}, {"entry_time", v.entry_time}});
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : s.crossings)
    cs.push_back({{"vid", c.vid}, {"lane", c.lane}, {"conflict", c.conflict}, {"time", c.time}});
  return {{"time_now", s.time_now}, {"vehicles", vs}, {"crossings", cs}};
}

Snapshot load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read snapshot " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::format, path.string() + ": " + e.what());
  }
  try {
    return snapshot_from_json(j);
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<PlanComparison> compare_solvers(const Snapshot& snap, const ScenarioConfig& config,
                                            const SageModel* model, const std::map<VehicleId, double>& overrides) {
  validate(config);
  for (const auto& v : snap.vehicles)
    if (!(v.pos >= config.entry_pos && v.pos < config.exit_pos))
      fail(ErrorCode::domain, "vehicle " + std::to_string(v.vid) + " is outside the control zone");
  const auto inst = make_instance(snap.time_now, snap.vehicles, config, snap.crossings);

  std::map<VehicleId, double> t_hat;
  if (model) t_hat = predict_exit_times(*model, inst, config);
  for (const auto& v : snap.vehicles) {
    if (auto it = overrides.find(v.vid); it != overrides.end()) t_hat[v.vid] = it->second;
    else if (!t_hat.count(v.vid)) t_hat[v.vid] = inst.range(v.vid).t_lo;
  }
  for (const auto& [vid, _] : overrides)
    if (!std::any_of(snap.vehicles.begin(), snap.vehicles.end(), [&](const auto& v) { return v.vid == vid; }))
      fail(ErrorCode::config, "t_hat override for unknown vehicle " + std::to_string(vid));

  const auto scan = cooperative_replan(inst, config);
  const auto warm = cooperative_replan_warmstart(inst, t_hat, config);

  std::vector<PlanComparison> out;
  for (VehicleId vid : decision_sequence(inst)) {
    PlanComparison c;
    c.vid = vid;
    c.lane = inst.state(vid).lane;
    c.range = inst.range(vid);
    c.t_hat = t_hat.at(vid);
    c.scan = scan.at(vid);
    c.warm = warm.at(vid);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace cavsched
