#include <doctest.h>

#include <cmath>
#include <limits>

#include "cavsched/error.hpp"
#include "cavsched/planner.hpp"
#include "support.hpp"

using namespace cavsched;

namespace {

PlanningInstance lone(double t0, LaneId lane, double pos, double speed) {
  return make_instance(t0, {{1, lane, pos, speed, t0}}, default_scenario());
}

}  // namespace

TEST_CASE("make_instance: absolute ranges and graph") {
  const auto c = default_scenario();
  const auto inst = make_instance(100.0, {{4, 0, 0.0, 10.0, 100.0}, {2, 2, 50.0, 20.0, 95.0}}, c);
  CHECK(inst.range(4).t_lo == doctest::Approx(113.0 + 1.0 / 3.0));
  CHECK(inst.range(4).t_hi == doctest::Approx(339.875));
  CHECK(inst.range(2).t_lo == doctest::Approx(110.0));
  CHECK(inst.graph.edges.size() == 1);
  CHECK_THROWS_AS(inst.range(9), Error);
}

TEST_CASE("decision sequence: by t_lo, then t_hi, then vid") {
  const auto c = default_scenario();
  const auto inst = make_instance(0.0,
                                  {{5, 0, 0.0, 10.0, 0.0},
                                   {3, 1, 0.0, 10.0, 0.0},
                                   {9, 2, 100.0, 15.0, 0.0},
                                   {1, 3, 0.0, 8.0, 0.0}},
                                  c);
  CHECK(decision_sequence(inst) == std::vector<VehicleId>{9, 3, 5, 1});
}

TEST_CASE("lone vehicle at 10 m/s") {
  // The cubic reaches v_max at the exit when T = 1.5 d / (v_max + v0 / 2) = 15;
  // the first grid point above 15 from t_lo = 40/3 is t_lo + 17 eps.
  const auto inst = lone(0.0, 0, 0.0, 10.0);
  const auto r = solve_exit_time_scan(1, inst, {}, default_scenario());
  CHECK(r.feasible);
  CHECK(r.t_exit == doctest::Approx(15.0 + 1.0 / 30.0).epsilon(1e-12));
  CHECK(r.iterations == 18);
  CHECK(r.plan.t_exit == r.t_exit);
}

TEST_CASE("lone vehicle at v_max cruises") {
  const auto r = solve_exit_time_scan(1, lone(100.0, 2, 0.0, 20.0), {}, default_scenario());
  CHECK(r.feasible);
  CHECK(r.t_exit == doctest::Approx(112.5));
  CHECK(r.iterations == 1);
}

TEST_CASE("first grid point clearing a lateral gap") {
  // At t_lo = 12.5 the vehicle crosses at 11.75, one second after a recorded
  // crossing at 10.75; the first grid exit that crosses at >= 12.75 is 13.7.
  auto inst = make_instance(0.0, {{1, 0, 0.0, 20.0, 0.0}}, default_scenario(), {{7, 2, 0, 10.75}});
  const auto r = solve_exit_time_scan(1, inst, {}, default_scenario());
  CHECK(r.feasible);
  CHECK(r.t_exit == doctest::Approx(13.7).epsilon(1e-12));
  CHECK(r.iterations == 13);
}

TEST_CASE("leader and follower on one lane") {
  const auto c = default_scenario();
  const auto inst = make_instance(0.0, {{1, 0, 40.0, 10.0, 0.0}, {2, 0, 0.0, 14.0, 0.0}}, c);
  const auto res = cooperative_replan(inst, c);
  CHECK(res.at(1).feasible);
  CHECK(res.at(1).t_exit == doctest::Approx(12.0 + 19.0 / 30.0).epsilon(1e-12));
  CHECK(res.at(1).iterations == 14);
  CHECK(res.at(2).feasible);
  CHECK(res.at(2).t_exit == doctest::Approx(16.0).epsilon(1e-12));
  CHECK(res.at(2).iterations == 33);
  CHECK(joint_safety_replay(inst, res, c).empty());
}

TEST_CASE("blocked range falls back to the least violation") {
  const auto c = default_scenario();
  std::vector<CrossingRecord> wall;
  for (int k = -20; k < 400; ++k) wall.push_back({100 + k, 2, 0, 0.7 * k});
  const auto inst = make_instance(0.0, {{1, 0, 0.0, 10.0, 0.0}}, c, wall);
  const auto r = solve_exit_time_scan(1, inst, {}, c);
  CHECK_FALSE(r.feasible);
  CHECK(r.first_violated != Violation::none);

  // Exhaustive scan for the least-violating monotone candidate.
  const auto& range = inst.range(1);
  double best = std::numeric_limits<double>::infinity(), best_t = 0.0;
  const auto n = static_cast<long>(std::floor((range.t_hi - range.t_lo) / c.epsilon + 1e-9));
  for (long k = 0; k <= n; ++k) {
    const double t = range.t_lo + static_cast<double>(k) * c.epsilon;
    const auto ev = evaluate_candidate(1, t, inst, {}, c);
    CHECK_FALSE(ev.report.feasible);
    if (ev.monotone && ev.report.worst_violation < best) best = ev.report.worst_violation, best_t = t;
  }
  CHECK(r.violation == best);
  CHECK(r.t_exit == best_t);
  CHECK(r.iterations == n + 1);
}

TEST_CASE("previous exit time is tried when the grid comes up empty") {
  const auto c = default_scenario();
  // Feasible crossing times form the single point tc: recorded crossings sit
  // at tc + 2k for every k != 0.
  const double target = 13.05;
  const double tc = crossing_time(solve_coefficients(0.0, 0.0, 20.0, target, 250.0), 235.0);
  std::vector<CrossingRecord> recs;
  for (int k = -100; k <= 150; ++k)
    if (k != 0) recs.push_back({1000 + k, 2, 0, tc + 2.0 * k});
  auto inst = make_instance(0.0, {{1, 0, 0.0, 20.0, 0.0}}, c, recs);

  auto r = solve_exit_time_scan(1, inst, {}, c);
  CHECK_FALSE(r.feasible);
  CHECK_FALSE(r.from_previous);

  inst.previous_exit[1] = target;
  r = solve_exit_time_scan(1, inst, {}, c);
  CHECK(r.feasible);
  CHECK(r.from_previous);
  CHECK(r.t_exit == target);
  const long grid = static_cast<long>(std::floor((inst.range(1).t_hi - inst.range(1).t_lo) / c.epsilon + 1e-9)) + 1;
  CHECK(r.iterations == grid + 1);

  // A previous exit outside the current range is ignored.
  inst.previous_exit[1] = 12.0;
  CHECK_FALSE(solve_exit_time_scan(1, inst, {}, c).from_previous);
}

TEST_CASE("solve_in_sequence isolates per-vehicle errors") {
  const auto c = default_scenario();
  const auto inst = make_instance(0.0, {{1, 0, 0.0, 20.0, 0.0}, {2, 2, 0.0, 20.0, 0.0}, {3, 1, 0.0, 20.0, 0.0}}, c);
  std::vector<std::size_t> seen_committed;
  const auto res = solve_in_sequence(inst, c, [&](VehicleId vid, const PlanningInstance& i, auto committed) {
    seen_committed.push_back(committed.size());
    if (vid == 2) fail(ErrorCode::domain, "boom");
    return solve_exit_time_scan(vid, i, committed, c);
  });
  CHECK(res.size() == 3);
  CHECK(res.at(2).error == "boom");
  CHECK(res.at(1).error.empty());
  CHECK(seen_committed == std::vector<std::size_t>{0, 1, 1});
}

TEST_CASE("subset solves see the fixed plans") {
  const auto c = default_scenario();
  const auto inst = make_instance(0.0, {{1, 0, 40.0, 10.0, 0.0}, {2, 0, 0.0, 14.0, 0.0}}, c);
  const auto lead = cooperative_replan(make_instance(0.0, {{1, 0, 40.0, 10.0, 0.0}}, c), c);
  const std::vector<CommittedPlan> fixed{to_committed(inst, lead.at(1))};
  const auto res = solve_in_sequence(
      inst, c, [&](VehicleId v, const PlanningInstance& i, auto cm) { return solve_exit_time_scan(v, i, cm, c); },
      fixed, {2});
  CHECK(res.size() == 1);
  CHECK(res.at(2).t_exit == doctest::Approx(16.0).epsilon(1e-12));
}

TEST_CASE("scan results are grid-minimal and jointly safe") {
  const auto c = default_scenario();
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const auto inst = testing::random_instance(rng, c, 6);
    const auto res = cooperative_replan(inst, c);
    std::vector<CommittedPlan> committed;
    for (VehicleId vid : decision_sequence(inst)) {
      const auto& r = res.at(vid);
      REQUIRE(r.error.empty());
      if (r.feasible) {
        const auto& range = inst.range(vid);
        for (int k = 0; range.t_lo + k * c.epsilon < r.t_exit - 1e-9; ++k)
          CHECK_FALSE(evaluate_candidate(vid, range.t_lo + k * c.epsilon, inst, committed, c).report.feasible);
      }
      committed.push_back(to_committed(inst, r));
    }
    CHECK(joint_safety_replay(inst, res, c).empty());
  }
}
