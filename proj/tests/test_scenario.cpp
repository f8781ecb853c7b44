#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cavsched/error.hpp"
#include "cavsched/scenario.hpp"

using namespace cavsched;
using nlohmann::json;

namespace {

std::string config_error(const json& j) {
  try {
    scenario_from_json(j);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config);
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("default crossing") {
  const auto c = default_scenario();
  CHECK_NOTHROW(validate(c));
  CHECK(c.lanes.size() == 4);
  CHECK(c.conflicts.size() == 4);
  CHECK(c.exit_pos == 250.0);
  CHECK(c.epsilon == 0.1);
  REQUIRE(c.conflict_between(0, 3));
  CHECK(c.conflict_between(0, 3)->pos_on(0) == 241.0);
  CHECK(c.conflict_between(0, 3)->pos_on(3) == 235.0);
  CHECK(c.conflict_between(3, 0) == c.conflict_between(0, 3));
  CHECK(c.conflict_between(0, 1) == nullptr);
  CHECK(c.conflict_between(2, 3) == nullptr);
  CHECK(c.lane_index(2) == 2);
  CHECK_THROWS_AS(c.lane_index(7), Error);
}

TEST_CASE("json round trip and partial files") {
  const auto c = default_scenario();
  const auto back = scenario_from_json(scenario_to_json(c));
  CHECK(scenario_to_json(back) == scenario_to_json(c));

  const auto partial = scenario_from_json(json{{"d_min", 12.5}, {"delta_lateral", 1.0}});
  CHECK(partial.d_min == 12.5);
  CHECK(partial.delta_lateral == 1.0);
  CHECK(partial.lanes.size() == 4);
}

TEST_CASE("validation names the offending key") {
  CHECK(config_error(json{{"v_min", 0.0}}).find("'v_min'") != std::string::npos);
  CHECK(config_error(json{{"u_min", 1.0}}).find("'u_min'") != std::string::npos);
  CHECK(config_error(json{{"dt_check", 0.2}}).find("'dt_check'") != std::string::npos);
  CHECK(config_error(json{{"v_max", 0.5}}).find("'v_max'") != std::string::npos);
  CHECK(config_error(json{{"speed_limit", 3}}).find("'speed_limit'") != std::string::npos);
  CHECK(config_error(json{{"d_min", "ten"}}).find("'d_min'") != std::string::npos);
  const json bad_lane{{"conflicts", json::array({{{"id", 0}, {"lane_a", 0}, {"lane_b", 9}, {"pos_on_a", 235.0},
                                                  {"pos_on_b", 235.0}}})}};
  CHECK(config_error(bad_lane).find("conflicts[0].lane_b") != std::string::npos);
  const json dup{{"lanes", json::array({{{"id", 0}, {"stop_line_pos", 200.0}}, {{"id", 0}, {"stop_line_pos", 200.0}}})},
                 {"conflicts", json::array()}};
  CHECK(config_error(dup).find("lanes[1].id") != std::string::npos);
}

TEST_CASE("load_scenario reports the path") {
  const auto path = std::filesystem::temp_directory_path() / "cavsched_test_scenario.json";
  {
    std::ofstream(path) << R"({"d_min": 8.0})";
  }
  CHECK(load_scenario(path).d_min == 8.0);
  {
    std::ofstream(path) << "{ not json";
  }
  try {
    load_scenario(path);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(path.string()) != std::string::npos);
  }
  std::filesystem::remove(path);
  try {
    load_scenario(path);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::io);
  }
}

TEST_CASE("coordination graph") {
  const auto c = default_scenario();
  // Lane 0: 3 (10 m) behind 1 (50 m) behind 4 (90 m); lane 1: 2; lane 2: 5.
  const std::vector<VehicleState> s{
      {1, 0, 50.0, 10.0, 0.0}, {2, 1, 20.0, 10.0, 0.0}, {3, 0, 10.0, 10.0, 0.0},
      {4, 0, 90.0, 10.0, 0.0}, {5, 2, 30.0, 10.0, 0.0},
  };
  const auto g = build_graph(s, c);
  CHECK(g.nodes == std::vector<VehicleId>{1, 2, 3, 4, 5});
  const std::vector<std::pair<VehicleId, VehicleId>> expected{{1, 3}, {1, 4}, {1, 5}, {2, 5}, {3, 5}, {4, 5}};
  CHECK(g.edges == expected);

  CHECK_THROWS_AS(build_graph({{1, 9, 0.0, 10.0, 0.0}}, c), Error);
  CHECK_THROWS_AS(build_graph({{1, 0, 0.0, 10.0, 0.0}, {1, 1, 0.0, 10.0, 0.0}}, c), Error);
  CHECK(build_graph({}, c).edges.empty());
}

TEST_CASE("equal positions order by vid") {
  const auto c = default_scenario();
  const auto g = build_graph({{7, 0, 5.0, 10.0, 0.0}, {3, 0, 5.0, 10.0, 0.0}, {5, 0, 5.0, 10.0, 0.0}}, c);
  const std::vector<std::pair<VehicleId, VehicleId>> expected{{3, 5}, {5, 7}};
  CHECK(g.edges == expected);
}
