#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cavsched/gnn.hpp"
#include "cavsched/planner.hpp"
#include "cavsched/scenario.hpp"

namespace cavsched {

enum class SolverKind { baseline, gnn };
enum class ReplanMode { every_step, entry_only };

std::string_view to_string(SolverKind s);
std::string_view to_string(ReplanMode m);

// Poisson arrivals at total_rate_vph, each assigned a lane from lane_split
// (uniform when empty) and a uniform entry speed.
struct ArrivalModel {
  double total_rate_vph = 1200.0;
  std::vector<double> lane_split;
  double entry_speed_min = 8.0;
  double entry_speed_max = 14.0;
  std::uint64_t seed = 0;
};

void validate(const ArrivalModel& arrival, const ScenarioConfig& config);

struct SimOptions {
  double duration = 600.0;
  SolverKind solver = SolverKind::baseline;
  ReplanMode replan = ReplanMode::every_step;
  // Also run the grid scan beside each warm-started solve to measure the
  // exit-time gap. Excluded from wall-clock.
  bool measure_gap = false;
  bool record_trajectory = false;
  // Called after every cooperative solve with the instance and its results.
  std::function<void(const PlanningInstance&, const SolveMap&)> on_solve;
};

struct VehicleRecord {
  VehicleId vid = 0;
  LaneId lane = 0;
  double arrival_time = 0.0;
  double entry_time = 0.0;
  double exit_time = 0.0;
  double entry_speed = 0.0;
  double travel_time() const { return exit_time - entry_time; }
};

struct StepStats {
  double time = 0.0;
  int vehicles = 0;
  int solves = 0;
  long evaluations = 0;
  int infeasible = 0;
  double wall_seconds = 0.0;
};

struct AuditFlag {
  std::string kind;  // "lateral", "rear_end" or "position"
  VehicleId a = 0;
  VehicleId b = 0;
  double time = 0.0;
  double value = 0.0;  // offending gap
};

struct TrajectoryRow {
  double t = 0.0;
  VehicleId vid = 0;
  LaneId lane = 0;
  double pos = 0.0;
  double speed = 0.0;
  double accel = 0.0;
};

struct SimMetrics {
  std::vector<VehicleRecord> retired;
  double mean_travel_time = 0.0;
  double std_travel_time = 0.0;
  std::vector<StepStats> steps;  // steps where at least one solve ran
  std::vector<AuditFlag> audit;
  std::size_t arrived = 0;
  std::size_t admitted = 0;
  std::size_t in_zone = 0;
  std::size_t queued = 0;
  std::size_t solves = 0;
  std::size_t infeasible_solves = 0;
  std::size_t solver_errors = 0;
  long evaluations = 0;
  double mean_evals_per_solve = 0.0;
  double mean_step_seconds = 0.0;
  double p95_step_seconds = 0.0;
  double mean_gap = 0.0;  // warm-start exit time minus scan exit time
  std::size_t gap_samples = 0;
  std::vector<TrajectoryRow> trajectory;
};

SimMetrics run(const ScenarioConfig& config, const ArrivalModel& arrival, const SimOptions& options,
               const SageModel* model = nullptr);

// Deterministic part of the metrics as line-delimited JSON: one line per
// retired vehicle, then a summary line. Wall-clock goes to write_timing.
void write_metrics(const SimMetrics& m, const std::filesystem::path& path);
void write_timing(const SimMetrics& m, const std::filesystem::path& path);
void write_trajectory(const SimMetrics& m, const std::filesystem::path& path);

// Baseline every-step simulation per rate; one record per step whose solves
// were all feasible. Returns the number of records written.
std::size_t generate_dataset(const ScenarioConfig& config, const ArrivalModel& base, const std::vector<double>& rates,
                             double duration, const std::filesystem::path& out_path);

struct BenchRow {
  double rate = 0.0;
  std::uint64_t seed = 0;
  SolverKind solver = SolverKind::baseline;
  ReplanMode replan = ReplanMode::every_step;
  std::size_t retired = 0;
  double mean_travel_time = 0.0;
  double std_travel_time = 0.0;
  double mean_step_ms = 0.0;
  double p95_step_ms = 0.0;
  double mean_evals = 0.0;
  double mean_gap = 0.0;
  std::size_t audit_flags = 0;
  std::size_t infeasible_solves = 0;
  std::size_t solves = 0;
};

// All four solver x replan arms for each (rate, seed); the gnn arms need a model.
std::vector<BenchRow> bench(const ScenarioConfig& config, const ArrivalModel& base, const std::vector<double>& rates,
                            const std::vector<std::uint64_t>& seeds, double duration, const SageModel* model,
                            const std::function<void(const BenchRow&)>& on_row = {});

void write_bench_csv(const std::vector<BenchRow>& rows, const std::filesystem::path& path);

}  // namespace cavsched
