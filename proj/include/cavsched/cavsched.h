/* C interface to the cavsched engine. All handles are opaque; every call
 * that can fail returns a cav_status and leaves a message readable through
 * cav_last_error() on the calling thread. */
#ifndef CAVSCHED_H
#define CAVSCHED_H

#include <stddef.h>
#include <stdint.h>

#if defined(CAVSCHED_BUILDING)
#define CAV_API __attribute__((visibility("default")))
#else
#define CAV_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  CAV_OK = 0,
  CAV_ERR_CONFIG = 1,
  CAV_ERR_DOMAIN = 2,
  CAV_ERR_DEGENERATE = 3,
  CAV_ERR_INVALID_PLAN = 4,
  CAV_ERR_ORDERING = 5,
  CAV_ERR_MODEL = 6,
  CAV_ERR_FORMAT = 7,
  CAV_ERR_VERSION = 8,
  CAV_ERR_IO = 9,
  CAV_ERR_INTERNAL = 10,
  CAV_ERR_ARGUMENT = 11 /* null handle or pointer, bad enum value */
} cav_status;

typedef enum { CAV_SOLVER_BASELINE = 0, CAV_SOLVER_GNN = 1 } cav_solver;
typedef enum { CAV_REPLAN_EVERY_STEP = 0, CAV_REPLAN_ENTRY_ONLY = 1 } cav_replan;

typedef struct cav_scenario cav_scenario;
typedef struct cav_model cav_model;
typedef struct cav_snapshot cav_snapshot;
typedef struct cav_bench_rows cav_bench_rows;
typedef struct cav_plan_rows cav_plan_rows;

CAV_API const char* cav_last_error(void);
CAV_API const char* cav_version(void);
CAV_API const char* cav_status_name(cav_status s);
CAV_API void cav_string_free(char* s);

/* ---- scenario ---- */
CAV_API cav_status cav_scenario_default(cav_scenario** out);
CAV_API cav_status cav_scenario_load(const char* path, cav_scenario** out);
CAV_API cav_status cav_scenario_from_json(const char* json, cav_scenario** out);
/* Resolved configuration as JSON; free with cav_string_free. */
CAV_API cav_status cav_scenario_to_json(const cav_scenario* s, char** out_json);
CAV_API void cav_scenario_free(cav_scenario* s);

/* ---- model ---- */
CAV_API cav_status cav_model_load(const char* path, cav_model** out);
CAV_API cav_status cav_model_save(const cav_model* m, const char* path);
CAV_API cav_status cav_model_info(const cav_model* m, int* feature_dim, int* hidden_dim, int* layers);
CAV_API void cav_model_free(cav_model* m);

/* ---- arrivals ---- */
typedef struct {
  double total_rate_vph;
  const double* lane_split; /* one weight per lane, or NULL for uniform */
  size_t lane_split_len;
  double entry_speed_min;
  double entry_speed_max;
  uint64_t seed;
} cav_arrival;

CAV_API void cav_arrival_defaults(cav_arrival* a);

/* ---- dataset ---- */
CAV_API cav_status cav_generate_dataset(const cav_scenario* s, const cav_arrival* base, const double* rates,
                                        size_t n_rates, double duration, const char* out_path, size_t* n_records);

/* ---- training ---- */
typedef struct {
  int hidden_dim;
  int layers;
  int max_epochs;
  int batch_size;
  double learning_rate;
  double huber_delta;
  double split;
  int patience;
  uint64_t seed;
} cav_train_options;

typedef struct {
  size_t train_size;
  size_t val_size;
  int epochs_run;
  int best_epoch;
  double best_val_loss;
  double train_loss_at_best;
} cav_train_report;

typedef void (*cav_epoch_callback)(int epoch, double train_loss, double val_loss, void* user);

CAV_API void cav_train_options_defaults(cav_train_options* o);
CAV_API cav_status cav_train(const char* dataset_path, const cav_train_options* o, cav_epoch_callback cb, void* user,
                             cav_model** out, cav_train_report* report);

/* ---- simulation ---- */
typedef struct {
  double duration;
  int solver; /* cav_solver */
  int replan; /* cav_replan */
  int measure_gap;
  const char* metrics_path;    /* JSONL, deterministic; NULL to skip */
  const char* timing_path;     /* wall-clock JSON; NULL to skip */
  const char* trajectory_path; /* CSV; NULL to skip */
} cav_sim_options;

typedef struct {
  size_t arrived;
  size_t admitted;
  size_t retired;
  size_t in_zone;
  size_t queued;
  size_t solves;
  size_t infeasible_solves;
  size_t solver_errors;
  size_t audit_flags;
  size_t gap_samples;
  double mean_travel_time;
  double std_travel_time;
  double mean_evals_per_solve;
  double mean_step_ms;
  double p95_step_ms;
  double mean_gap;
} cav_sim_summary;

CAV_API void cav_sim_options_defaults(cav_sim_options* o);
/* model may be NULL for the baseline solver. */
CAV_API cav_status cav_simulate(const cav_scenario* s, const cav_arrival* a, const cav_sim_options* o,
                                const cav_model* model, cav_sim_summary* out);

/* ---- bench ---- */
typedef struct {
  double rate;
  uint64_t seed;
  int solver;
  int replan;
  size_t retired;
  double mean_travel_time;
  double std_travel_time;
  double mean_step_ms;
  double p95_step_ms;
  double mean_evals;
  double mean_gap;
  size_t audit_flags;
  size_t infeasible_solves;
  size_t solves;
} cav_bench_row;

typedef void (*cav_bench_callback)(const cav_bench_row* row, void* user);

/* Runs all four solver x replan arms per (rate, seed); csv_path may be NULL. */
CAV_API cav_status cav_bench(const cav_scenario* s, const cav_arrival* base, const double* rates, size_t n_rates,
                             const uint64_t* seeds, size_t n_seeds, double duration, const cav_model* model,
                             const char* csv_path, cav_bench_callback cb, void* user, cav_bench_rows** out);
CAV_API size_t cav_bench_rows_count(const cav_bench_rows* r);
CAV_API cav_status cav_bench_rows_get(const cav_bench_rows* r, size_t i, cav_bench_row* out);
CAV_API void cav_bench_rows_free(cav_bench_rows* r);

/* ---- one-shot planning ---- */
typedef struct {
  int vid;
  int lane;
  double t_lo;
  double t_hi;
  double t_hat;
  double scan_t_exit;
  int scan_iterations;
  int scan_feasible;
  double scan_violation;
  double warm_t_exit;
  int warm_iterations;
  int warm_feasible;
  double warm_violation;
  double gap; /* warm_t_exit - scan_t_exit */
} cav_plan_row;

CAV_API cav_status cav_snapshot_load(const char* path, cav_snapshot** out);
CAV_API cav_status cav_snapshot_from_json(const char* json, cav_snapshot** out);
CAV_API void cav_snapshot_free(cav_snapshot* s);

/* t_hat per vehicle: overrides first, then the model (may be NULL), then t_lo. */
CAV_API cav_status cav_plan(const cav_scenario* s, const cav_snapshot* snap, const cav_model* model,
                            const int* override_vids, const double* override_t_hat, size_t n_overrides,
                            cav_plan_rows** out);
CAV_API size_t cav_plan_rows_count(const cav_plan_rows* r);
CAV_API cav_status cav_plan_rows_get(const cav_plan_rows* r, size_t i, cav_plan_row* out);
CAV_API void cav_plan_rows_free(cav_plan_rows* r);

#ifdef __cplusplus
}
#endif

#endif /* CAVSCHED_H */
