#include "cavsched/cavsched.h"

#include <cstring>
#include <new>
#include <string>

#include "cavsched/error.hpp"
#include "cavsched/gnn.hpp"
#include "cavsched/scenario.hpp"
#include "cavsched/sim.hpp"
#include "cavsched/snapshot.hpp"

struct cav_scenario {
  cavsched::ScenarioConfig config;
};
struct cav_model {
  cavsched::SageModel model;
};
struct cav_snapshot {
  cavsched::Snapshot snapshot;
};
struct cav_bench_rows {
  std::vector<cav_bench_row> rows;
};
struct cav_plan_rows {
  std::vector<cav_plan_row> rows;
};

namespace {

thread_local std::string g_last_error;

cav_status status_of(cavsched::ErrorCode c) {
  using cavsched::ErrorCode;
  switch (c) {
    case ErrorCode::config: return CAV_ERR_CONFIG;
    case ErrorCode::domain: return CAV_ERR_DOMAIN;
    case ErrorCode::degenerate_horizon: return CAV_ERR_DEGENERATE;
    case ErrorCode::invalid_plan: return CAV_ERR_INVALID_PLAN;
    case ErrorCode::ordering: return CAV_ERR_ORDERING;
    case ErrorCode::model: return CAV_ERR_MODEL;
    case ErrorCode::format: return CAV_ERR_FORMAT;
    case ErrorCode::version: return CAV_ERR_VERSION;
    case ErrorCode::io: return CAV_ERR_IO;
    case ErrorCode::internal: return CAV_ERR_INTERNAL;
  }
  return CAV_ERR_INTERNAL;
}

cav_status set_error(cav_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

// Runs f, translating exceptions into a status and the thread's last error.
template <class F>
cav_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return CAV_OK;
  } catch (const cavsched::Error& e) {
    return set_error(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(CAV_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(CAV_ERR_INTERNAL, e.what());
  }
}

#define CAV_REQUIRE(cond, what) \
  if (!(cond)) return set_error(CAV_ERR_ARGUMENT, what)

cavsched::ArrivalModel to_arrival(const cav_arrival& a) {
  cavsched::ArrivalModel m;
  m.total_rate_vph = a.total_rate_vph;
  if (a.lane_split) m.lane_split.assign(a.lane_split, a.lane_split + a.lane_split_len);
  m.entry_speed_min = a.entry_speed_min;
  m.entry_speed_max = a.entry_speed_max;
  m.seed = a.seed;
  return m;
}

bool valid_solver(int s) { return s == CAV_SOLVER_BASELINE || s == CAV_SOLVER_GNN; }
bool valid_replan(int r) { return r == CAV_REPLAN_EVERY_STEP || r == CAV_REPLAN_ENTRY_ONLY; }

cavsched::SolverKind to_solver(int s) {
  return s == CAV_SOLVER_GNN ? cavsched::SolverKind::gnn : cavsched::SolverKind::baseline;
}
cavsched::ReplanMode to_replan(int r) {
  return r == CAV_REPLAN_ENTRY_ONLY ? cavsched::ReplanMode::entry_only : cavsched::ReplanMode::every_step;
}

cav_bench_row to_row(const cavsched::BenchRow& r) {
  cav_bench_row o{};
  o.rate = r.rate;
  o.seed = r.seed;
  o.solver = r.solver == cavsched::SolverKind::gnn ? CAV_SOLVER_GNN : CAV_SOLVER_BASELINE;
  o.replan = r.replan == cavsched::ReplanMode::entry_only ? CAV_REPLAN_ENTRY_ONLY : CAV_REPLAN_EVERY_STEP;
  o.retired = r.retired;
  o.mean_travel_time = r.mean_travel_time;
  o.std_travel_time = r.std_travel_time;
  o.mean_step_ms = r.mean_step_ms;
  o.p95_step_ms = r.p95_step_ms;
  o.mean_evals = r.mean_evals;
  o.mean_gap = r.mean_gap;
  o.audit_flags = r.audit_flags;
  o.infeasible_solves = r.infeasible_solves;
  o.solves = r.solves;
  return o;
}

}  // namespace

extern "C" {

const char* cav_last_error(void) { return g_last_error.c_str(); }

const char* cav_version(void) { return CAVSCHED_VERSION; }

const char* cav_status_name(cav_status s) {
  switch (s) {
    case CAV_OK: return "ok";
    case CAV_ERR_CONFIG: return "config";
    case CAV_ERR_DOMAIN: return "domain";
    case CAV_ERR_DEGENERATE: return "degenerate_horizon";
    case CAV_ERR_INVALID_PLAN: return "invalid_plan";
    case CAV_ERR_ORDERING: return "ordering";
    case CAV_ERR_MODEL: return "model";
    case CAV_ERR_FORMAT: return "format";
    case CAV_ERR_VERSION: return "version";
    case CAV_ERR_IO: return "io";
    case CAV_ERR_INTERNAL: return "internal";
    case CAV_ERR_ARGUMENT: return "argument";
  }
  return "unknown";
}

void cav_string_free(char* s) { delete[] s; }

cav_status cav_scenario_default(cav_scenario** out) {
  CAV_REQUIRE(out, "out is null");
  return guarded([&] { *out = new cav_scenario{cavsched::default_scenario()}; });
}

cav_status cav_scenario_load(const char* path, cav_scenario** out) {
  CAV_REQUIRE(path && out, "path or out is null");
  return guarded([&] { *out = new cav_scenario{cavsched::load_scenario(path)}; });
}

cav_status cav_scenario_from_json(const char* json, cav_scenario** out) {
  CAV_REQUIRE(json && out, "json or out is null");
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
      cavsched::fail(cavsched::ErrorCode::format, e.what());
    }
    *out = new cav_scenario{cavsched::scenario_from_json(j)};
  });
}

cav_status cav_scenario_to_json(const cav_scenario* s, char** out_json) {
  CAV_REQUIRE(s && out_json, "scenario or out is null");
  return guarded([&] {
    const std::string text = cavsched::scenario_to_json(s->config).dump(2);
    char* buf = new char[text.size() + 1];
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out_json = buf;
  });
}

void cav_scenario_free(cav_scenario* s) { delete s; }

cav_status cav_model_load(const char* path, cav_model** out) {
  CAV_REQUIRE(path && out, "path or out is null");
  return guarded([&] { *out = new cav_model{cavsched::load_model(path)}; });
}

cav_status cav_model_save(const cav_model* m, const char* path) {
  CAV_REQUIRE(m && path, "model or path is null");
  return guarded([&] { cavsched::save_model(m->model, path); });
}

cav_status cav_model_info(const cav_model* m, int* feature_dim, int* hidden_dim, int* layers) {
  CAV_REQUIRE(m, "model is null");
  if (feature_dim) *feature_dim = m->model.feature_dim;
  if (hidden_dim) *hidden_dim = m->model.hidden_dim;
  if (layers) *layers = static_cast<int>(m->model.layers.size());
  return CAV_OK;
}

void cav_model_free(cav_model* m) { delete m; }

void cav_arrival_defaults(cav_arrival* a) {
  if (!a) return;
  const cavsched::ArrivalModel d;
  *a = cav_arrival{d.total_rate_vph, nullptr, 0, d.entry_speed_min, d.entry_speed_max, 0};
}

cav_status cav_generate_dataset(const cav_scenario* s, const cav_arrival* base, const double* rates, size_t n_rates,
                                double duration, const char* out_path, size_t* n_records) {
  CAV_REQUIRE(s && base && out_path, "scenario, arrival or path is null");
  CAV_REQUIRE(rates || n_rates == 0, "rates is null");
  return guarded([&] {
    const auto n = cavsched::generate_dataset(s->config, to_arrival(*base), std::vector<double>(rates, rates + n_rates),
                                              duration, out_path);
    if (n_records) *n_records = n;
  });
}

void cav_train_options_defaults(cav_train_options* o) {
  if (!o) return;
  const cavsched::TrainOptions d;
  *o = cav_train_options{d.hidden_dim,  d.layers, d.max_epochs, d.batch_size, d.learning_rate,
                         d.huber_delta, d.split,  d.patience,   d.seed};
}

cav_status cav_train(const char* dataset_path, const cav_train_options* o, cav_epoch_callback cb, void* user,
                     cav_model** out, cav_train_report* report) {
  CAV_REQUIRE(dataset_path && o && out, "dataset path, options or out is null");
  return guarded([&] {
    cavsched::TrainOptions opt;
    opt.hidden_dim = o->hidden_dim;
    opt.layers = o->layers;
    opt.max_epochs = o->max_epochs;
    opt.batch_size = o->batch_size;
    opt.learning_rate = o->learning_rate;
    opt.huber_delta = o->huber_delta;
    opt.split = o->split;
    opt.patience = o->patience;
    opt.seed = o->seed;
    const auto data = cavsched::load_dataset(dataset_path);
    cavsched::TrainReport rep;
    auto model = cavsched::train(data, opt, &rep, [&](const cavsched::EpochStats& e) {
      if (cb) cb(e.epoch, e.train_loss, e.val_loss, user);
    });
    *out = new cav_model{std::move(model)};
    if (report) {
      report->train_size = rep.train_size;
      report->val_size = rep.val_size;
      report->epochs_run = static_cast<int>(rep.curve.size());
      report->best_epoch = rep.best_epoch;
      report->best_val_loss = rep.best_val_loss;
      report->train_loss_at_best = rep.train_loss_at_best;
    }
  });
}

void cav_sim_options_defaults(cav_sim_options* o) {
  if (!o) return;
  *o = cav_sim_options{600.0, CAV_SOLVER_BASELINE, CAV_REPLAN_EVERY_STEP, 0, nullptr, nullptr, nullptr};
}

cav_status cav_simulate(const cav_scenario* s, const cav_arrival* a, const cav_sim_options* o, const cav_model* model,
                        cav_sim_summary* out) {
  CAV_REQUIRE(s && a && o, "scenario, arrival or options is null");
  CAV_REQUIRE(valid_solver(o->solver) && valid_replan(o->replan), "unknown solver or replan mode");
  return guarded([&] {
    cavsched::SimOptions opt;
    opt.duration = o->duration;
    opt.solver = to_solver(o->solver);
    opt.replan = to_replan(o->replan);
    opt.measure_gap = o->measure_gap != 0;
    opt.record_trajectory = o->trajectory_path != nullptr;
    const auto m = cavsched::run(s->config, to_arrival(*a), opt, model ? &model->model : nullptr);
    if (o->metrics_path) cavsched::write_metrics(m, o->metrics_path);
    if (o->timing_path) cavsched::write_timing(m, o->timing_path);
    if (o->trajectory_path) cavsched::write_trajectory(m, o->trajectory_path);
    if (out) {
      *out = cav_sim_summary{m.arrived,
                             m.admitted,
                             m.retired.size(),
                             m.in_zone,
                             m.queued,
                             m.solves,
                             m.infeasible_solves,
                             m.solver_errors,
                             m.audit.size(),
                             m.gap_samples,
                             m.mean_travel_time,
                             m.std_travel_time,
                             m.mean_evals_per_solve,
                             m.mean_step_seconds * 1e3,
                             m.p95_step_seconds * 1e3,
                             m.mean_gap};
    }
  });
}

cav_status cav_bench(const cav_scenario* s, const cav_arrival* base, const double* rates, size_t n_rates,
                     const uint64_t* seeds, size_t n_seeds, double duration, const cav_model* model,
                     const char* csv_path, cav_bench_callback cb, void* user, cav_bench_rows** out) {
  CAV_REQUIRE(s && base, "scenario or arrival is null");
  CAV_REQUIRE(rates && n_rates > 0, "no rates");
  CAV_REQUIRE(seeds && n_seeds > 0, "no seeds");
  return guarded([&] {
    const auto rows = cavsched::bench(
        s->config, to_arrival(*base), std::vector<double>(rates, rates + n_rates),
        std::vector<std::uint64_t>(seeds, seeds + n_seeds), duration, model ? &model->model : nullptr,
        [&](const cavsched::BenchRow& r) {
          if (cb) {
            const auto row = to_row(r);
            cb(&row, user);
          }
        });
    if (csv_path) cavsched::write_bench_csv(rows, csv_path);
    if (out) {
      auto* h = new cav_bench_rows;
      for (const auto& r : rows) h->rows.push_back(to_row(r));
      *out = h;
    }
  });
}

size_t cav_bench_rows_count(const cav_bench_rows* r) { return r ? r->rows.size() : 0; }

cav_status cav_bench_rows_get(const cav_bench_rows* r, size_t i, cav_bench_row* out) {
  CAV_REQUIRE(r && out, "rows or out is null");
  CAV_REQUIRE(i < r->rows.size(), "row index out of range");
  *out = r->rows[i];
  return CAV_OK;
}

void cav_bench_rows_free(cav_bench_rows* r) { delete r; }

cav_status cav_snapshot_load(const char* path, cav_snapshot** out) {
  CAV_REQUIRE(path && out, "path or out is null");
  return guarded([&] { *out = new cav_snapshot{cavsched::load_snapshot(path)}; });
}

cav_status cav_snapshot_from_json(const char* json, cav_snapshot** out) {
  CAV_REQUIRE(json && out, "json or out is null");
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
      cavsched::fail(cavsched::ErrorCode::format, e.what());
    }
    *out = new cav_snapshot{cavsched::snapshot_from_json(j)};
  });
}

void cav_snapshot_free(cav_snapshot* s) { delete s; }

cav_status cav_plan(const cav_scenario* s, const cav_snapshot* snap, const cav_model* model, const int* override_vids,
                    const double* override_t_hat, size_t n_overrides, cav_plan_rows** out) {
  CAV_REQUIRE(s && snap && out, "scenario, snapshot or out is null");
  CAV_REQUIRE(n_overrides == 0 || (override_vids && override_t_hat), "override arrays are null");
  return guarded([&] {
    std::map<cavsched::VehicleId, double> overrides;
    for (size_t i = 0; i < n_overrides; ++i) overrides[override_vids[i]] = override_t_hat[i];
    const auto cmp = cavsched::compare_solvers(snap->snapshot, s->config, model ? &model->model : nullptr, overrides);
    auto* h = new cav_plan_rows;
    for (const auto& c : cmp) {
      cav_plan_row r{};
      r.vid = c.vid;
      r.lane = c.lane;
      r.t_lo = c.range.t_lo;
      r.t_hi = c.range.t_hi;
      r.t_hat = c.t_hat;
      r.scan_t_exit = c.scan.t_exit;
      r.scan_iterations = c.scan.iterations;
      r.scan_feasible = c.scan.feasible ? 1 : 0;
      r.scan_violation = c.scan.violation;
      r.warm_t_exit = c.warm.t_exit;
      r.warm_iterations = c.warm.iterations;
      r.warm_feasible = c.warm.feasible ? 1 : 0;
      r.warm_violation = c.warm.violation;
      r.gap = c.gap();
      h->rows.push_back(r);
    }
    *out = h;
  });
}

size_t cav_plan_rows_count(const cav_plan_rows* r) { return r ? r->rows.size() : 0; }

cav_status cav_plan_rows_get(const cav_plan_rows* r, size_t i, cav_plan_row* out) {
  CAV_REQUIRE(r && out, "rows or out is null");
  CAV_REQUIRE(i < r->rows.size(), "row index out of range");
  *out = r->rows[i];
  return CAV_OK;
}

void cav_plan_rows_free(cav_plan_rows* r) { delete r; }

}  // extern "C"
