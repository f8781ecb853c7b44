// Command-line front end. Talks to the engine only through the C API.
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "cavsched/cavsched.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RuntimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(cav_status s, const std::string& what) {
  if (s != CAV_OK) throw RuntimeError(what + ": " + cav_status_name(s) + " error: " + cav_last_error());
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using ScenarioPtr = std::unique_ptr<cav_scenario, Deleter<cav_scenario, cav_scenario_free>>;
using ModelPtr = std::unique_ptr<cav_model, Deleter<cav_model, cav_model_free>>;
using SnapshotPtr = std::unique_ptr<cav_snapshot, Deleter<cav_snapshot, cav_snapshot_free>>;
using BenchRowsPtr = std::unique_ptr<cav_bench_rows, Deleter<cav_bench_rows, cav_bench_rows_free>>;
using PlanRowsPtr = std::unique_ptr<cav_plan_rows, Deleter<cav_plan_rows, cav_plan_rows_free>>;

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

ScenarioPtr open_scenario(const std::string& path) {
  cav_scenario* s = nullptr;
  if (path.empty()) check(cav_scenario_default(&s), "default scenario");
  else check(cav_scenario_load(path.c_str(), &s), "scenario " + path);
  return ScenarioPtr(s);
}

json scenario_json(const cav_scenario* s) {
  char* text = nullptr;
  check(cav_scenario_to_json(s, &text), "scenario to json");
  json j = json::parse(text);
  cav_string_free(text);
  return j;
}

ModelPtr open_model(const std::string& path) {
  cav_model* m = nullptr;
  check(cav_model_load(path.c_str(), &m), "model " + path);
  return ModelPtr(m);
}

// Written before any output artifact and rewritten when the command ends.
class Manifest {
 public:
  Manifest(std::string command, fs::path path, const std::vector<std::string>& argv) : path_(std::move(path)) {
    j_["command"] = std::move(command);
    j_["argv"] = argv;
    j_["version"] = cav_version();
    j_["started_at"] = utc_now();
    j_["finished_at"] = nullptr;
    j_["status"] = "running";
  }

  Manifest(const Manifest&) = delete;
  Manifest& operator=(const Manifest&) = delete;

  // A command that threw after the first write leaves status "error".
  ~Manifest() {
    if (!written_ || finished_) return;
    try {
      finish("error");
    } catch (...) {
    }
  }

  json& operator[](const char* key) { return j_[key]; }

  void write() {
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
    std::ofstream out(path_);
    if (!out) throw RuntimeError("cannot write manifest " + path_.string());
    out << j_.dump(2) << '\n';
    written_ = true;
  }

  void finish(const std::string& status) {
    j_["finished_at"] = utc_now();
    j_["status"] = status;
    finished_ = true;
    write();
  }

 private:
  fs::path path_;
  json j_;
  bool written_ = false;
  bool finished_ = false;
};

struct ArrivalArgs {
  std::vector<double> lane_split;
  double speed_min = 8.0;
  double speed_max = 14.0;

  void add(CLI::App* app) {
    app->add_option("--lane-split", lane_split, "Per-lane arrival weights (default uniform)")->delimiter(',');
    app->add_option("--entry-speed-min", speed_min, "Lower entry speed, m/s")->capture_default_str();
    app->add_option("--entry-speed-max", speed_max, "Upper entry speed, m/s")->capture_default_str();
  }

  cav_arrival make(double rate, std::uint64_t seed) const {
    cav_arrival a;
    cav_arrival_defaults(&a);
    a.total_rate_vph = rate;
    a.lane_split = lane_split.empty() ? nullptr : lane_split.data();
    a.lane_split_len = lane_split.size();
    a.entry_speed_min = speed_min;
    a.entry_speed_max = speed_max;
    a.seed = seed;
    return a;
  }

  json to_json() const {
    return {{"lane_split", lane_split}, {"entry_speed_min", speed_min}, {"entry_speed_max", speed_max}};
  }
};

int parse_solver(const std::string& s) {
  if (s == "baseline") return CAV_SOLVER_BASELINE;
  if (s == "gnn") return CAV_SOLVER_GNN;
  throw UsageError("unknown solver '" + s + "'");
}

int parse_replan(const std::string& s) {
  if (s == "every" || s == "every_step") return CAV_REPLAN_EVERY_STEP;
  if (s == "entry" || s == "entry_only") return CAV_REPLAN_ENTRY_ONLY;
  throw UsageError("unknown replan mode '" + s + "'");
}

const char* solver_name(int s) { return s == CAV_SOLVER_GNN ? "gnn" : "baseline"; }
const char* replan_name(int r) { return r == CAV_REPLAN_ENTRY_ONLY ? "entry_only" : "every_step"; }

// ---- gen-data ----------------------------------------------------------------

struct GenDataArgs {
  std::string scenario, out, manifest;
  std::vector<double> rates{1200, 1400, 1600};
  double duration = 600.0;
  std::uint64_t seed = 0;
  ArrivalArgs arrival;
};

int run_gen_data(const GenDataArgs& a, const std::vector<std::string>& argv) {
  auto scen = open_scenario(a.scenario);
  Manifest man("gen-data", a.manifest.empty() ? a.out + ".manifest.json" : a.manifest, argv);
  man["config"] = {{"scenario", scenario_json(scen.get())},
                   {"rates", a.rates},
                   {"duration", a.duration},
                   {"arrival", a.arrival.to_json()}};
  man["seeds"] = {a.seed};
  man["outputs"] = {{"dataset", a.out}};
  man.write();
  const auto arrival = a.arrival.make(a.rates.front(), a.seed);
  size_t n = 0;
  check(cav_generate_dataset(scen.get(), &arrival, a.rates.data(), a.rates.size(), a.duration, a.out.c_str(), &n),
        "gen-data");
  man["records"] = n;
  man.finish("ok");
  std::cout << n << " records written to " << a.out << '\n';
  return kExitOk;
}

// ---- train -------------------------------------------------------------------

struct TrainArgs {
  std::string data, out, curve, manifest;
  cav_train_options opt{};
  TrainArgs() { cav_train_options_defaults(&opt); }
};

int run_train(const TrainArgs& a, const std::vector<std::string>& argv) {
  const std::string curve_path = a.curve.empty() ? a.out + ".curve.csv" : a.curve;
  Manifest man("train", a.manifest.empty() ? a.out + ".manifest.json" : a.manifest, argv);
  man["config"] = {{"data", a.data},
                   {"hidden_dim", a.opt.hidden_dim},
                   {"layers", a.opt.layers},
                   {"max_epochs", a.opt.max_epochs},
                   {"batch_size", a.opt.batch_size},
                   {"learning_rate", a.opt.learning_rate},
                   {"huber_delta", a.opt.huber_delta},
                   {"split", a.opt.split},
                   {"patience", a.opt.patience}};
  man["seeds"] = {a.opt.seed};
  man["outputs"] = {{"model", a.out}, {"curve", curve_path}};
  man.write();

  if (fs::path(curve_path).has_parent_path()) fs::create_directories(fs::path(curve_path).parent_path());
  std::ofstream curve(curve_path);
  if (!curve) throw RuntimeError("cannot write " + curve_path);
  curve << std::setprecision(17) << "epoch,train_loss,val_loss\n";
  struct Ctx {
    std::ofstream* curve;
  } ctx{&curve};
  auto cb = [](int epoch, double tr, double va, void* user) {
    auto* c = static_cast<Ctx*>(user);
    *c->curve << epoch << ',' << tr << ',' << va << '\n';
    std::fprintf(stderr, "epoch %d train %.6f val %.6f\n", epoch, tr, va);
  };
  cav_model* raw = nullptr;
  cav_train_report rep{};
  check(cav_train(a.data.c_str(), &a.opt, cb, &ctx, &raw, &rep), "train");
  ModelPtr model(raw);
  check(cav_model_save(model.get(), a.out.c_str()), "save model");
  man["report"] = {{"train_size", rep.train_size},       {"val_size", rep.val_size},
                   {"epochs_run", rep.epochs_run},       {"best_epoch", rep.best_epoch},
                   {"best_val_loss", rep.best_val_loss}, {"train_loss_at_best", rep.train_loss_at_best}};
  man.finish("ok");
  std::cout << "split " << rep.train_size << " train / " << rep.val_size << " validation records\n"
            << "best epoch " << rep.best_epoch << " of " << rep.epochs_run << ": train Huber "
            << rep.train_loss_at_best << ", validation Huber " << rep.best_val_loss << '\n'
            << "model written to " << a.out << '\n';
  return kExitOk;
}

// ---- simulate ----------------------------------------------------------------

struct SimulateArgs {
  std::string scenario, solver = "baseline", replan = "every", model, metrics = "metrics.jsonl", traj_log, manifest;
  double rate = 1200.0;
  double duration = 600.0;
  std::uint64_t seed = 0;
  bool measure_gap = false;
  ArrivalArgs arrival;
};

int run_simulate(const SimulateArgs& a, const std::vector<std::string>& argv) {
  const int solver = parse_solver(a.solver);
  const int replan = parse_replan(a.replan);
  if (solver == CAV_SOLVER_GNN && a.model.empty()) throw UsageError("--solver gnn requires --model");
  auto scen = open_scenario(a.scenario);
  ModelPtr model;
  if (!a.model.empty()) model = open_model(a.model);

  const std::string timing = a.metrics + ".timing.json";
  const std::string summary_csv = a.metrics + ".summary.csv";
  Manifest man("simulate", a.manifest.empty() ? a.metrics + ".manifest.json" : a.manifest, argv);
  man["config"] = {{"scenario", scenario_json(scen.get())},
                   {"solver", solver_name(solver)},
                   {"replan", replan_name(replan)},
                   {"model", a.model},
                   {"rate", a.rate},
                   {"duration", a.duration},
                   {"measure_gap", a.measure_gap},
                   {"arrival", a.arrival.to_json()}};
  man["seeds"] = {a.seed};
  json outputs{{"metrics", a.metrics}, {"timing", timing}, {"summary", summary_csv}};
  if (!a.traj_log.empty()) outputs["trajectory"] = a.traj_log;
  man["outputs"] = outputs;
  man.write();

  const auto arrival = a.arrival.make(a.rate, a.seed);
  cav_sim_options opt;
  cav_sim_options_defaults(&opt);
  opt.duration = a.duration;
  opt.solver = solver;
  opt.replan = replan;
  opt.measure_gap = a.measure_gap ? 1 : 0;
  opt.metrics_path = a.metrics.c_str();
  opt.timing_path = timing.c_str();
  opt.trajectory_path = a.traj_log.empty() ? nullptr : a.traj_log.c_str();
  cav_sim_summary s{};
  check(cav_simulate(scen.get(), &arrival, &opt, model.get(), &s), "simulate");

  std::ofstream csv(summary_csv);
  if (!csv) throw RuntimeError("cannot write " + summary_csv);
  csv << std::setprecision(10)
      << "solver,replan,rate,seed,arrived,admitted,retired,in_zone,queued,mean_travel_time,std_travel_time,solves,"
         "infeasible_solves,solver_errors,mean_evals_per_solve,audit_flags,mean_gap\n"
      << solver_name(solver) << ',' << replan_name(replan) << ',' << a.rate << ',' << a.seed << ',' << s.arrived << ','
      << s.admitted << ',' << s.retired << ',' << s.in_zone << ',' << s.queued << ',' << s.mean_travel_time << ','
      << s.std_travel_time << ',' << s.solves << ',' << s.infeasible_solves << ',' << s.solver_errors << ','
      << s.mean_evals_per_solve << ',' << s.audit_flags << ',' << s.mean_gap << '\n';
  man.finish("ok");

  std::cout << std::fixed << std::setprecision(3) << "retired " << s.retired << " of " << s.admitted
            << " admitted (" << s.in_zone << " in zone, " << s.queued << " queued)\n"
            << "mean travel time " << s.mean_travel_time << " s (std " << s.std_travel_time << ")\n"
            << "evaluations per solve " << s.mean_evals_per_solve << ", step wall-clock mean " << s.mean_step_ms
            << " ms, p95 " << s.p95_step_ms << " ms\n"
            << "infeasible solves " << s.infeasible_solves << ", audit flags " << s.audit_flags << '\n';
  if (a.measure_gap) std::cout << "mean exit-time gap " << s.mean_gap << " s over " << s.gap_samples << " solves\n";
  return kExitOk;
}

// ---- bench -------------------------------------------------------------------

struct BenchArgs {
  std::string scenario, model, out = "bench.csv", manifest;
  std::vector<double> rates{1200, 1400, 1600};
  std::vector<std::uint64_t> seeds;
  double duration = 600.0;
  ArrivalArgs arrival;
};

// Published travel times (s) for GNN + every-step replanning and for the
// scan solver planned once at entry, kept for side-by-side comparison.
const std::map<int, std::pair<double, double>> kReferenceTravelTime{
    {1200, {9.69, 10.38}}, {1400, {10.34, 11.44}}, {1600, {10.72, 12.09}}};

void print_bench_summary(const std::vector<cav_bench_row>& rows, const std::vector<double>& rates) {
  struct Acc {
    double tt = 0, evals = 0, step = 0, gap = 0;
    size_t n = 0, flags = 0;
  };
  std::cout << std::fixed << std::setprecision(3);
  std::cout << "\nrate   arm                  travel_s  evals/solve  step_ms  gap_s   audit\n";
  for (double rate : rates) {
    std::map<std::pair<int, int>, Acc> acc;
    for (const auto& r : rows) {
      if (r.rate != rate) continue;
      auto& x = acc[{r.solver, r.replan}];
      x.tt += r.mean_travel_time;
      x.evals += r.mean_evals;
      x.step += r.mean_step_ms;
      x.gap += r.mean_gap;
      x.flags += r.audit_flags;
      ++x.n;
    }
    for (auto& [k, x] : acc) {
      const double n = static_cast<double>(x.n);
      x.tt /= n, x.evals /= n, x.step /= n, x.gap /= n;
      std::cout << std::setw(6) << std::setprecision(0) << rate << std::setprecision(3) << "  " << std::left
                << std::setw(20) << (std::string(solver_name(k.first)) + "/" + replan_name(k.second)) << std::right
                << std::setw(9) << x.tt << std::setw(13) << x.evals << std::setw(9) << x.step << std::setw(8) << x.gap
                << std::setw(8) << x.flags << '\n';
    }
    auto get = [&](int s, int r) { return acc.count({s, r}) ? acc[{s, r}].tt : NAN; };
    const double be = get(CAV_SOLVER_BASELINE, CAV_REPLAN_ENTRY_ONLY);
    const double bv = get(CAV_SOLVER_BASELINE, CAV_REPLAN_EVERY_STEP);
    const double gv = get(CAV_SOLVER_GNN, CAV_REPLAN_EVERY_STEP);
    std::cout << "        every_step vs entry_only (baseline solver): " << 100.0 * (be - bv) / be << " %\n"
              << "        gnn/every_step vs baseline/entry_only:      " << 100.0 * (be - gv) / be << " %\n";
    if (acc.count({CAV_SOLVER_GNN, CAV_REPLAN_EVERY_STEP}) && acc.count({CAV_SOLVER_BASELINE, CAV_REPLAN_EVERY_STEP}))
      std::cout << "        evaluations gnn/baseline (every_step):      "
                << acc[{CAV_SOLVER_GNN, CAV_REPLAN_EVERY_STEP}].evals /
                       acc[{CAV_SOLVER_BASELINE, CAV_REPLAN_EVERY_STEP}].evals
                << '\n';
    if (auto it = kReferenceTravelTime.find(static_cast<int>(std::lround(rate))); it != kReferenceTravelTime.end()) {
      const auto [prop, base] = it->second;
      std::cout << "        reference: gnn/every_step " << std::setprecision(2) << prop << " s, baseline/entry_only "
                << base << " s, improvement " << 100.0 * (base - prop) / base << " %\n"
                << std::setprecision(3);
    }
  }
}

int run_bench(const BenchArgs& a, const std::vector<std::string>& argv) {
  if (a.seeds.empty()) throw UsageError("--seeds must list at least one seed");
  if (a.rates.empty()) throw UsageError("--rates must list at least one rate");
  auto scen = open_scenario(a.scenario);
  auto model = open_model(a.model);
  Manifest man("bench", a.manifest.empty() ? a.out + ".manifest.json" : a.manifest, argv);
  man["config"] = {{"scenario", scenario_json(scen.get())},
                   {"model", a.model},
                   {"rates", a.rates},
                   {"duration", a.duration},
                   {"arrival", a.arrival.to_json()}};
  man["seeds"] = a.seeds;
  man["outputs"] = {{"table", a.out}};
  man.write();

  const auto arrival = a.arrival.make(a.rates.front(), a.seeds.front());
  auto cb = [](const cav_bench_row* r, void*) {
    std::fprintf(stderr, "rate %.0f seed %llu %s/%s: travel %.3f s, evals %.2f, audit %zu\n", r->rate,
                 static_cast<unsigned long long>(r->seed), solver_name(r->solver), replan_name(r->replan),
                 r->mean_travel_time, r->mean_evals, r->audit_flags);
  };
  cav_bench_rows* raw = nullptr;
  check(cav_bench(scen.get(), &arrival, a.rates.data(), a.rates.size(), a.seeds.data(), a.seeds.size(), a.duration,
                  model.get(), a.out.c_str(), cb, nullptr, &raw),
        "bench");
  BenchRowsPtr rows(raw);
  std::vector<cav_bench_row> all(cav_bench_rows_count(rows.get()));
  for (size_t i = 0; i < all.size(); ++i) check(cav_bench_rows_get(rows.get(), i, &all[i]), "bench row");
  man.finish("ok");
  print_bench_summary(all, a.rates);
  std::cout << "\ntable written to " << a.out << '\n';
  return kExitOk;
}

// ---- plan --------------------------------------------------------------------

struct PlanArgs {
  std::string scenario, snapshot, model, out, manifest;
  std::vector<std::string> t_hat;
};

int run_plan(const PlanArgs& a, const std::vector<std::string>& argv) {
  std::vector<int> vids;
  std::vector<double> values;
  for (const auto& item : a.t_hat) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("--t-hat expects VID=SECONDS, got '" + item + "'");
    try {
      size_t used = 0;
      vids.push_back(std::stoi(item.substr(0, eq), &used));
      if (used != eq) throw std::invalid_argument("vid");
      const std::string v = item.substr(eq + 1);
      values.push_back(std::stod(v, &used));
      if (used != v.size()) throw std::invalid_argument("value");
    } catch (const std::exception&) {
      throw UsageError("--t-hat expects VID=SECONDS, got '" + item + "'");
    }
  }
  auto scen = open_scenario(a.scenario);
  ModelPtr model;
  if (!a.model.empty()) model = open_model(a.model);
  cav_snapshot* raw_snap = nullptr;
  check(cav_snapshot_load(a.snapshot.c_str(), &raw_snap), "snapshot");
  SnapshotPtr snap(raw_snap);

  Manifest man("plan", a.manifest.empty() ? (a.out.empty() ? "plan.manifest.json" : a.out + ".manifest.json") : a.manifest,
               argv);
  man["config"] = {{"scenario", scenario_json(scen.get())},
                   {"snapshot", a.snapshot},
                   {"model", a.model},
                   {"t_hat", a.t_hat}};
  man["seeds"] = json::array();
  man["outputs"] = a.out.empty() ? json::object() : json{{"plan", a.out}};
  man.write();

  cav_plan_rows* raw_rows = nullptr;
  check(cav_plan(scen.get(), snap.get(), model.get(), vids.data(), values.data(), vids.size(), &raw_rows), "plan");
  PlanRowsPtr rows(raw_rows);

  json out = json::array();
  std::cout << std::fixed << std::setprecision(4)
            << "  vid lane       t_lo       t_hi      t_hat |  scan_exit  it ok |  warm_exit  it ok |     gap\n";
  for (size_t i = 0; i < cav_plan_rows_count(rows.get()); ++i) {
    cav_plan_row r{};
    check(cav_plan_rows_get(rows.get(), i, &r), "plan row");
    std::cout << std::setw(5) << r.vid << std::setw(5) << r.lane << std::setw(11) << r.t_lo << std::setw(11) << r.t_hi
              << std::setw(11) << r.t_hat << " |" << std::setw(11) << r.scan_t_exit << std::setw(4)
              << r.scan_iterations << std::setw(3) << (r.scan_feasible ? "y" : "n") << " |" << std::setw(11)
              << r.warm_t_exit << std::setw(4) << r.warm_iterations << std::setw(3) << (r.warm_feasible ? "y" : "n")
              << " |" << std::setw(8) << r.gap << '\n';
    if (!r.scan_feasible || !r.warm_feasible)
      std::cout << "      violation: scan " << r.scan_violation << ", warm " << r.warm_violation << '\n';
    out.push_back({{"vid", r.vid},
                   {"lane", r.lane},
                   {"t_lo", r.t_lo},
                   {"t_hi", r.t_hi},
                   {"t_hat", r.t_hat},
                   {"scan", {{"t_exit", r.scan_t_exit}, {"iterations", r.scan_iterations},
                             {"feasible", r.scan_feasible != 0}, {"violation", r.scan_violation}}},
                   {"warm", {{"t_exit", r.warm_t_exit}, {"iterations", r.warm_iterations},
                             {"feasible", r.warm_feasible != 0}, {"violation", r.warm_violation}}},
                   {"gap", r.gap}});
  }
  if (!a.out.empty()) {
    std::ofstream f(a.out);
    if (!f) throw RuntimeError("cannot write " + a.out);
    f << std::setprecision(17) << out.dump(2) << '\n';
  }
  man.finish("ok");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"Intersection coordination engine: data generation, training, simulation, benchmarking"};
  app.set_version_flag("--version", std::string(cav_version()));
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* c_gen = app.add_subcommand("gen-data", "Generate a training dataset from baseline simulations");
  c_gen->add_option("--scenario", gen.scenario, "Scenario JSON (default built-in crossing)")->check(CLI::ExistingFile);
  c_gen->add_option("--rates", gen.rates, "Arrival rates, veh/h")->delimiter(',')->capture_default_str();
  c_gen->add_option("--duration", gen.duration, "Simulated seconds per rate")->capture_default_str();
  c_gen->add_option("--seed", gen.seed, "Random seed")->required();
  c_gen->add_option("--out", gen.out, "Dataset JSONL path")->required();
  c_gen->add_option("--manifest", gen.manifest, "Run manifest path (default <out>.manifest.json)");
  gen.arrival.add(c_gen);

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train the GNN exit-time predictor");
  c_train->add_option("--data", tr.data, "Dataset JSONL")->required()->check(CLI::ExistingFile);
  c_train->add_option("--out", tr.out, "Model file path")->required();
  c_train->add_option("--curve", tr.curve, "Loss curve CSV (default <out>.curve.csv)");
  c_train->add_option("--epochs", tr.opt.max_epochs, "Maximum epochs")->capture_default_str();
  c_train->add_option("--hidden", tr.opt.hidden_dim, "Hidden width")->capture_default_str();
  c_train->add_option("--layers", tr.opt.layers, "Number of GraphSAGE layers")->capture_default_str();
  c_train->add_option("--batch", tr.opt.batch_size, "Records per mini-batch")->capture_default_str();
  c_train->add_option("--lr", tr.opt.learning_rate, "Learning rate")->capture_default_str();
  c_train->add_option("--huber-delta", tr.opt.huber_delta, "Huber threshold, s")->capture_default_str();
  c_train->add_option("--split", tr.opt.split, "Training fraction")->capture_default_str();
  c_train->add_option("--patience", tr.opt.patience, "Early-stop patience in epochs")->capture_default_str();
  c_train->add_option("--seed", tr.opt.seed, "Random seed")->required();
  c_train->add_option("--manifest", tr.manifest, "Run manifest path (default <out>.manifest.json)");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Run one simulation");
  c_sim->add_option("--scenario", sim.scenario, "Scenario JSON (default built-in crossing)")->check(CLI::ExistingFile);
  c_sim->add_option("--solver", sim.solver, "baseline or gnn")->capture_default_str();
  c_sim->add_option("--replan", sim.replan, "every or entry")->capture_default_str();
  c_sim->add_option("--model", sim.model, "Model file (required for --solver gnn)")->check(CLI::ExistingFile);
  c_sim->add_option("--rate", sim.rate, "Total arrival rate, veh/h")->capture_default_str();
  c_sim->add_option("--duration", sim.duration, "Simulated seconds")->capture_default_str();
  c_sim->add_option("--seed", sim.seed, "Random seed")->required();
  c_sim->add_option("--metrics", sim.metrics, "Metrics JSONL path")->capture_default_str();
  c_sim->add_option("--traj-log", sim.traj_log, "Per-step trajectory CSV");
  c_sim->add_flag("--measure-gap", sim.measure_gap, "Also run the scan beside each warm start");
  c_sim->add_option("--manifest", sim.manifest, "Run manifest path (default <metrics>.manifest.json)");
  sim.arrival.add(c_sim);

  BenchArgs bench;
  auto* c_bench = app.add_subcommand("bench", "Compare all solver and replanning arms");
  c_bench->add_option("--scenario", bench.scenario, "Scenario JSON (default built-in crossing)")->check(CLI::ExistingFile);
  c_bench->add_option("--model", bench.model, "Model file")->required()->check(CLI::ExistingFile);
  c_bench->add_option("--rates", bench.rates, "Arrival rates, veh/h")->delimiter(',')->capture_default_str();
  c_bench->add_option("--seeds", bench.seeds, "Random seeds")->delimiter(',')->required();
  c_bench->add_option("--duration", bench.duration, "Simulated seconds per run")->capture_default_str();
  c_bench->add_option("--out", bench.out, "Comparison table CSV")->capture_default_str();
  c_bench->add_option("--manifest", bench.manifest, "Run manifest path (default <out>.manifest.json)");
  bench.arrival.add(c_bench);

  PlanArgs plan;
  auto* c_plan = app.add_subcommand("plan", "Solve one snapshot with both algorithms");
  c_plan->add_option("--snapshot", plan.snapshot, "Snapshot JSON")->required()->check(CLI::ExistingFile);
  c_plan->add_option("--scenario", plan.scenario, "Scenario JSON (default built-in crossing)")->check(CLI::ExistingFile);
  c_plan->add_option("--model", plan.model, "Model file for predicted exit times")->check(CLI::ExistingFile);
  c_plan->add_option("--t-hat", plan.t_hat, "Predicted exit time override, VID=SECONDS (repeatable)")
      ->delimiter(',');
  c_plan->add_option("--out", plan.out, "Write results as JSON");
  c_plan->add_option("--manifest", plan.manifest, "Run manifest path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (c_gen->parsed()) return run_gen_data(gen, args);
    if (c_train->parsed()) return run_train(tr, args);
    if (c_sim->parsed()) return run_simulate(sim, args);
    if (c_bench->parsed()) return run_bench(bench, args);
    if (c_plan->parsed()) return run_plan(plan, args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
