#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>

#include "cavsched/cavsched.h"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path = fs::temp_directory_path() / "cavsched_test_capi";
  TempDir() { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const char* name) const { return (path / name).string(); }
};

void count_epoch(int, double, double, void* user) { ++*static_cast<int*>(user); }
void count_row(const cav_bench_row*, void* user) { ++*static_cast<int*>(user); }

}  // namespace

TEST_CASE("c api: status names and version") {
  CHECK(std::string(cav_status_name(CAV_OK)) == "ok");
  CHECK(std::string(cav_status_name(CAV_ERR_FORMAT)) == "format");
  CHECK(std::strlen(cav_version()) > 0);
}

TEST_CASE("c api: null arguments") {
  CHECK(cav_scenario_default(nullptr) == CAV_ERR_ARGUMENT);
  CHECK(std::string(cav_last_error()).size() > 0);
  cav_scenario* s = nullptr;
  CHECK(cav_scenario_from_json(nullptr, &s) == CAV_ERR_ARGUMENT);
  CHECK(s == nullptr);
  char* text = nullptr;
  CHECK(cav_scenario_to_json(nullptr, &text) == CAV_ERR_ARGUMENT);
  cav_sim_summary sum;
  CHECK(cav_simulate(nullptr, nullptr, nullptr, nullptr, &sum) == CAV_ERR_ARGUMENT);
  CHECK(cav_plan_rows_count(nullptr) == 0);
  CHECK(cav_bench_rows_count(nullptr) == 0);
  cav_scenario_free(nullptr);
  cav_model_free(nullptr);
  cav_snapshot_free(nullptr);
  cav_plan_rows_free(nullptr);
  cav_bench_rows_free(nullptr);
  cav_string_free(nullptr);
}

TEST_CASE("c api: scenario round trip and errors") {
  cav_scenario* s = nullptr;
  REQUIRE(cav_scenario_default(&s) == CAV_OK);
  char* text = nullptr;
  REQUIRE(cav_scenario_to_json(s, &text) == CAV_OK);
  cav_scenario* t = nullptr;
  CHECK(cav_scenario_from_json(text, &t) == CAV_OK);
  char* text2 = nullptr;
  REQUIRE(cav_scenario_to_json(t, &text2) == CAV_OK);
  CHECK(std::string(text) == std::string(text2));
  cav_string_free(text);
  cav_string_free(text2);
  cav_scenario_free(t);

  cav_scenario* bad = nullptr;
  CHECK(cav_scenario_from_json(R"({"v_min": -1})", &bad) == CAV_ERR_CONFIG);
  CHECK(std::string(cav_last_error()).find("v_min") != std::string::npos);
  CHECK(cav_scenario_from_json("{", &bad) == CAV_ERR_FORMAT);
  CHECK(cav_scenario_load("/nonexistent/scenario.json", &bad) == CAV_ERR_IO);
  CHECK(bad == nullptr);
  cav_scenario_free(s);
}

TEST_CASE("c api: plan a snapshot") {
  cav_scenario* s = nullptr;
  REQUIRE(cav_scenario_default(&s) == CAV_OK);
  cav_snapshot* snap = nullptr;
  REQUIRE(cav_snapshot_from_json(R"({"time_now": 0, "vehicles": [{"vid": 1, "lane": 0, "pos": 0, "speed": 10}]})",
                                 &snap) == CAV_OK);
  cav_plan_rows* rows = nullptr;
  REQUIRE(cav_plan(s, snap, nullptr, nullptr, nullptr, 0, &rows) == CAV_OK);
  REQUIRE(cav_plan_rows_count(rows) == 1);
  cav_plan_row r;
  REQUIRE(cav_plan_rows_get(rows, 0, &r) == CAV_OK);
  CHECK(r.vid == 1);
  CHECK(r.scan_feasible == 1);
  CHECK(r.scan_iterations == 18);
  CHECK(r.scan_t_exit == doctest::Approx(15.0 + 1.0 / 30.0));
  CHECK(cav_plan_rows_get(rows, 1, &r) == CAV_ERR_ARGUMENT);
  cav_plan_rows_free(rows);

  const int vid = 1;
  const double t_hat = 15.2;
  REQUIRE(cav_plan(s, snap, nullptr, &vid, &t_hat, 1, &rows) == CAV_OK);
  REQUIRE(cav_plan_rows_get(rows, 0, &r) == CAV_OK);
  CHECK(r.warm_iterations == 1);
  CHECK(r.warm_t_exit == doctest::Approx(15.2));
  CHECK(r.gap == doctest::Approx(15.2 - r.scan_t_exit));
  cav_plan_rows_free(rows);

  const int unknown = 4;
  CHECK(cav_plan(s, snap, nullptr, &unknown, &t_hat, 1, &rows) == CAV_ERR_CONFIG);
  CHECK(cav_plan(s, snap, nullptr, nullptr, nullptr, 1, &rows) == CAV_ERR_ARGUMENT);

  cav_snapshot* bad = nullptr;
  CHECK(cav_snapshot_from_json(R"({"time_now": 0})", &bad) == CAV_ERR_FORMAT);
  CHECK(std::string(cav_last_error()).find("vehicles") != std::string::npos);
  cav_snapshot_free(snap);
  cav_scenario_free(s);
}

TEST_CASE("c api: data, training, simulation and bench") {
  TempDir dir;
  cav_scenario* s = nullptr;
  REQUIRE(cav_scenario_default(&s) == CAV_OK);
  cav_arrival a;
  cav_arrival_defaults(&a);
  CHECK(a.total_rate_vph == 1200.0);
  a.seed = 8;
  const double rates[] = {1000.0};
  size_t n = 0;
  const auto data = dir / "data.jsonl";
  REQUIRE(cav_generate_dataset(s, &a, rates, 1, 40.0, data.c_str(), &n) == CAV_OK);
  CHECK(n > 50);

  cav_train_options o;
  cav_train_options_defaults(&o);
  CHECK(o.hidden_dim == 256);
  o.hidden_dim = 4;
  o.layers = 2;
  o.max_epochs = 3;
  o.seed = 2;
  cav_model* m = nullptr;
  cav_train_report rep;
  int epochs = 0;
  REQUIRE(cav_train(data.c_str(), &o, count_epoch, &epochs, &m, &rep) == CAV_OK);
  CHECK(epochs == 3);
  CHECK(rep.epochs_run == 3);
  CHECK(rep.train_size + rep.val_size == n);
  int fd = 0, hd = 0, nl = 0;
  REQUIRE(cav_model_info(m, &fd, &hd, &nl) == CAV_OK);
  CHECK(fd == 6);
  CHECK(hd == 4);
  CHECK(nl == 2);
  const auto model_path = dir / "m.sage";
  REQUIRE(cav_model_save(m, model_path.c_str()) == CAV_OK);
  cav_model* m2 = nullptr;
  REQUIRE(cav_model_load(model_path.c_str(), &m2) == CAV_OK);
  CHECK(cav_model_load((dir / "missing.sage").c_str(), &m2) == CAV_ERR_IO);

  cav_sim_options so;
  cav_sim_options_defaults(&so);
  so.duration = 60.0;
  so.solver = CAV_SOLVER_GNN;
  const auto metrics = dir / "metrics.jsonl";
  so.metrics_path = metrics.c_str();
  cav_sim_summary sum;
  REQUIRE(cav_simulate(s, &a, &so, m2, &sum) == CAV_OK);
  CHECK(sum.audit_flags == 0);
  CHECK(sum.arrived == sum.admitted + sum.queued);
  CHECK(fs::exists(metrics));
  CHECK(cav_simulate(s, &a, &so, nullptr, &sum) == CAV_ERR_CONFIG);
  so.solver = 7;
  CHECK(cav_simulate(s, &a, &so, m2, &sum) == CAV_ERR_ARGUMENT);

  const uint64_t seeds[] = {1};
  cav_bench_rows* rows = nullptr;
  int seen = 0;
  const auto csv = dir / "bench.csv";
  REQUIRE(cav_bench(s, &a, rates, 1, seeds, 1, 30.0, m2, csv.c_str(), count_row, &seen, &rows) == CAV_OK);
  CHECK(seen == 4);
  CHECK(cav_bench_rows_count(rows) == 4);
  cav_bench_row row;
  REQUIRE(cav_bench_rows_get(rows, 3, &row) == CAV_OK);
  CHECK(row.solver == CAV_SOLVER_GNN);
  CHECK(fs::exists(csv));
  cav_bench_rows_free(rows);

  cav_model_free(m);
  cav_model_free(m2);
  cav_scenario_free(s);
}
