#include "cavsched/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>

#include "cavsched/error.hpp"
#include "cavsched/rng.hpp"
#include "cavsched/warmstart.hpp"

namespace cavsched {

std::string_view to_string(SolverKind s) { return s == SolverKind::baseline ? "baseline" : "gnn"; }
std::string_view to_string(ReplanMode m) { return m == ReplanMode::every_step ? "every_step" : "entry_only"; }

void validate(const ArrivalModel& a, const ScenarioConfig& config) {
  if (!(a.total_rate_vph > 0.0) || !std::isfinite(a.total_rate_vph))
    fail(ErrorCode::config, "total_rate_vph must be positive");
  if (!a.lane_split.empty()) {
    if (a.lane_split.size() != config.lanes.size())
      fail(ErrorCode::config, "lane_split must have one weight per lane");
    double sum = 0.0;
    for (double w : a.lane_split) {
      if (!(w >= 0.0)) fail(ErrorCode::config, "lane_split weights must be non-negative");
      sum += w;
    }
    if (!(sum > 0.0)) fail(ErrorCode::config, "lane_split weights sum to zero");
  }
  if (!(a.entry_speed_min >= config.v_min && a.entry_speed_max <= config.v_max &&
        a.entry_speed_min <= a.entry_speed_max))
    fail(ErrorCode::config, "entry speed range must lie inside [v_min, v_max]");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Pending {
  double arrival = 0.0;
  double speed = 0.0;
};

struct Active {
  VehicleId vid = 0;
  LaneId lane = 0;
  double arrival = 0.0;
  double entry_time = 0.0;
  double entry_speed = 0.0;
  TrajectoryPlan plan;
  std::vector<PosSample> history;  // one sample per step since entry
  std::set<int> crossed;
};

class ArrivalStream {
 public:
  ArrivalStream(const ArrivalModel& m, std::size_t lanes) : model_(m), rng_(m.seed), lanes_(lanes) {
    weights_ = m.lane_split.empty() ? std::vector<double>(lanes, 1.0) : m.lane_split;
    total_ = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    next_ = rng_.exponential(m.total_rate_vph / 3600.0);
  }

  // Moves every arrival up to time t into the per-lane queues.
  std::size_t drain(double t, std::vector<std::deque<Pending>>& queues) {
    std::size_t n = 0;
    while (next_ <= t) {
      double u = rng_.uniform() * total_;
      std::size_t lane = 0;
      while (lane + 1 < lanes_ && u >= weights_[lane]) u -= weights_[lane++];
      const double v = rng_.uniform(model_.entry_speed_min, model_.entry_speed_max);
      queues[lane].push_back({next_, v});
      next_ += rng_.exponential(model_.total_rate_vph / 3600.0);
      ++n;
    }
    return n;
  }

 private:
  ArrivalModel model_;
  Rng rng_;
  std::size_t lanes_;
  std::vector<double> weights_;
  double total_ = 0.0;
  double next_ = 0.0;
};

CommittedPlan committed_of(const Active& a, double before) {
  CommittedPlan cp;
  cp.vid = a.vid;
  cp.lane = a.lane;
  cp.plan = a.plan;
  for (const auto& s : a.history)
    if (s.t < before - 1e-9) cp.history.push_back(s);
  return cp;
}

// Time the plan passes pos inside (t0, t1]; linear between the step
// endpoints if the plan is not monotone.
double passing_time(const TrajectoryPlan& plan, double pos, double t0, double p0, double t1, double p1) {
  try {
    return crossing_time(plan, pos);
  } catch (const Error&) {
    if (p1 <= p0) return t1;
    return t0 + (t1 - t0) * std::clamp((pos - p0) / (p1 - p0), 0.0, 1.0);
  }
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double idx = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(idx));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (idx - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

class Simulation {
 public:
  Simulation(const ScenarioConfig& c, const ArrivalModel& a, const SimOptions& o, const SageModel* m)
      : config_(c), options_(o), model_(m), arrivals_(a, c.lanes.size()), queues_(c.lanes.size()) {}

  SimMetrics run() {
    const double dt = config_.dt_sim;
    const auto steps = static_cast<long>(std::floor(options_.duration / dt + 1e-9));
    for (long k = 0; k < steps; ++k) {
      const double t = static_cast<double>(k) * dt;
      const double t_next = static_cast<double>(k + 1) * dt;
      m_.arrived += arrivals_.drain(t, queues_);
      const auto admitted = admit(t);
      plan(t, admitted);
      if (options_.record_trajectory) log_trajectory(t);
      advance(t, t_next);
      audit_rear_end(t_next);
    }
    audit_lateral();
    finish();
    return std::move(m_);
  }

 private:
  const ScenarioConfig& config_;
  const SimOptions& options_;
  const SageModel* model_;
  ArrivalStream arrivals_;
  std::vector<std::deque<Pending>> queues_;
  std::map<VehicleId, Active> active_;
  std::vector<CrossingRecord> crossings_;
  VehicleId next_vid_ = 1;
  SimMetrics m_;
  double gap_sum_ = 0.0;

  const Active* lane_leader(LaneId lane) const {
    const Active* best = nullptr;
    for (const auto& [vid, a] : active_)
      if (a.lane == lane) best = &a;  // map order: largest vid last
    return best;
  }

  std::vector<CrossingRecord> recent_crossings(double t) const {
    std::vector<CrossingRecord> out;
    for (const auto& c : crossings_)
      if (c.time >= t - config_.delta_lateral - 1.0) out.push_back(c);
    return out;
  }

  // A queued vehicle enters once it has a feasible plan against every
  // in-zone plan (and the plans of vehicles admitted earlier this step);
  // at most one entry per lane per step.
  std::vector<VehicleId> admit(double t) {
    std::vector<VehicleId> out;
    std::vector<CommittedPlan> zone;
    for (const auto& [vid, a] : active_)
      if (a.plan.t_exit > t) zone.push_back(committed_of(a, a.plan.t_start));
    const auto crossed = recent_crossings(t);
    for (std::size_t li = 0; li < queues_.size(); ++li) {
      auto& q = queues_[li];
      if (q.empty()) continue;
      const LaneId lane = config_.lanes[li].id;
      const Pending head = q.front();
      if (const Active* leader = lane_leader(lane)) {
        const auto cp = committed_of(*leader, leader->plan.t_start);
        if (position_at(cp, t - config_.delta_rear) - config_.entry_pos < config_.d_min - 1e-9) continue;
      }
      VehicleState s{next_vid_, lane, config_.entry_pos, head.speed, t};
      const auto inst = make_instance(t, {s}, config_, crossed);
      auto probe = solve_exit_time_scan(s.vid, inst, zone, config_);
      if (!probe.feasible) continue;
      zone.push_back({s.vid, lane, std::move(probe.plan), {}});
      q.pop_front();
      Active a;
      a.vid = next_vid_++;
      a.lane = lane;
      a.arrival = head.arrival;
      a.entry_time = t;
      a.entry_speed = head.speed;
      a.history.push_back({t, config_.entry_pos});
      active_[a.vid] = std::move(a);
      out.push_back(active_.rbegin()->first);
      ++m_.admitted;
    }
    return out;
  }

  VehicleState state_of(const Active& a, double t) const {
    if (a.plan.t_exit <= a.entry_time)  // admitted this step, not yet planned
      return {a.vid, a.lane, config_.entry_pos, a.entry_speed, a.entry_time};
    const auto k = eval_unchecked(a.plan, t);
    return {a.vid, a.lane, k.pos, k.speed, a.entry_time};
  }

  void plan(double t, const std::vector<VehicleId>& admitted) {
    const bool every = options_.replan == ReplanMode::every_step;
    if (active_.empty() || (!every && admitted.empty())) return;

    std::vector<VehicleState> states;
    for (const auto& [vid, a] : active_) states.push_back(state_of(a, t));
    auto inst = make_instance(t, std::move(states), config_, recent_crossings(t));

    std::vector<CommittedPlan> fixed;
    std::vector<VehicleId> subset;
    if (every) {
      for (const auto& [vid, a] : active_) {
        std::vector<PosSample> h;
        for (const auto& s : a.history)
          if (s.t < t - 1e-9 && s.t >= t - config_.delta_rear - 2.0 * config_.dt_sim) h.push_back(s);
        if (!h.empty()) inst.history[vid] = std::move(h);
        if (a.plan.t_exit > t) inst.previous_exit[vid] = a.plan.t_exit;
      }
    } else {
      for (const auto& [vid, a] : active_)
        if (std::find(admitted.begin(), admitted.end(), vid) == admitted.end())
          fixed.push_back(committed_of(a, a.plan.t_start));
      subset = admitted;
    }

    double wall = 0.0;
    std::map<VehicleId, double> t_hat;
    if (options_.solver == SolverKind::gnn) {
      if (!model_) fail(ErrorCode::config, "gnn solver needs a model");
      const auto t0 = Clock::now();
      t_hat = predict_exit_times(*model_, inst, config_);
      wall += seconds_since(t0);
    }

    StepStats st;
    st.time = t;
    st.vehicles = static_cast<int>(active_.size());
    auto solver = [&](VehicleId vid, const PlanningInstance& in, std::span<const CommittedPlan> c) {
      const auto t0 = Clock::now();
      SolveResult r;
      try {
        r = options_.solver == SolverKind::gnn ? solve_warmstart(vid, in, c, t_hat.at(vid), config_)
                                               : solve_exit_time_scan(vid, in, c, config_);
      } catch (const Error&) {
        // Horizon too short to re-solve: keep following the current plan.
        const auto& a = active_.at(vid);
        if (!(a.plan.t_exit > t)) throw;
        r = {};
        r.vid = vid;
        r.t_exit = a.plan.t_exit;
        r.plan = a.plan;
        r.from_previous = true;
        ++m_.solver_errors;
      }
      // The grid is re-anchored at each step's t_lo, so its first feasible
      // point can land just after the current plan's exit time. Keep the
      // current plan when it is earlier and still feasible.
      if (r.feasible && !r.from_previous) {
        if (auto it = in.previous_exit.find(vid); it != in.previous_exit.end() && it->second < r.t_exit) {
          auto ev = evaluate_candidate(vid, it->second, in, c, config_);
          ++r.iterations;
          if (ev.report.feasible) {
            r.t_exit = it->second;
            r.plan = std::move(ev.plan);
            r.from_previous = true;
          }
        }
      }
      wall += seconds_since(t0);
      if (options_.measure_gap && options_.solver == SolverKind::gnn && r.feasible && !r.from_previous) {
        const auto s = solve_exit_time_scan(vid, in, c, config_);
        if (s.feasible && !s.from_previous) {
          gap_sum_ += r.t_exit - s.t_exit;
          ++m_.gap_samples;
        }
      }
      return r;
    };
    const auto results = solve_in_sequence(inst, config_, solver, fixed, subset);

    for (const auto& [vid, r] : results) {
      ++st.solves;
      st.evaluations += r.iterations;
      if (!r.error.empty()) {
        ++m_.solver_errors;
        if (!(active_.at(vid).plan.t_exit > t)) fail(ErrorCode::internal, "vehicle without a plan: " + r.error);
        continue;
      }
      if (!r.feasible) ++st.infeasible;
      active_.at(vid).plan = r.plan;
    }
    st.wall_seconds = wall;
    m_.solves += static_cast<std::size_t>(st.solves);
    m_.evaluations += st.evaluations;
    m_.infeasible_solves += static_cast<std::size_t>(st.infeasible);
    m_.steps.push_back(st);
    if (options_.on_solve) options_.on_solve(inst, results);
  }

  void log_trajectory(double t) {
    for (const auto& [vid, a] : active_) {
      const auto k = eval_unchecked(a.plan, t);
      m_.trajectory.push_back({t, vid, a.lane, k.pos, k.speed, k.accel});
    }
  }

  void record_crossings(Active& a, double t0, double p0, double t1, double p1) {
    for (const auto& cp : config_.conflicts) {
      if (!cp.involves(a.lane) || a.crossed.count(cp.id)) continue;
      const double phi = cp.pos_on(a.lane);
      if (phi > p1) continue;
      a.crossed.insert(cp.id);
      crossings_.push_back({a.vid, a.lane, cp.id, passing_time(a.plan, phi, t0, p0, t1, p1)});
    }
  }

  void advance(double t, double t_next) {
    for (auto it = active_.begin(); it != active_.end();) {
      auto& a = it->second;
      const double p0 = a.history.back().pos;
      if (a.plan.t_exit <= t_next + 1e-3) {
        record_crossings(a, t, p0, a.plan.t_exit, a.plan.p_exit);
        m_.retired.push_back({a.vid, a.lane, a.arrival, a.entry_time, a.plan.t_exit, a.entry_speed});
        it = active_.erase(it);
        continue;
      }
      const double p1 = eval_unchecked(a.plan, t_next).pos;
      if (p1 < p0 - 1e-9) m_.audit.push_back({"position", a.vid, a.vid, t_next, p1 - p0});
      record_crossings(a, t, p0, t_next, p1);
      a.history.push_back({t_next, p1});
      ++it;
    }
  }

  static double history_pos(const Active& a, double t) {
    const auto& h = a.history;
    if (t <= h.front().t) return h.front().pos;
    if (t >= h.back().t) return h.back().pos;
    auto it = std::lower_bound(h.begin(), h.end(), t, [](const PosSample& s, double x) { return s.t < x; });
    const auto& b = *it;
    const auto& p = *(it - 1);
    return p.pos + (t - p.t) / (b.t - p.t) * (b.pos - p.pos);
  }

  // Executed positions of consecutive same-lane vehicles.
  void audit_rear_end(double t) {
    std::map<LaneId, const Active*> last;
    for (const auto& [vid, a] : active_) {
      auto& lead = last[a.lane];
      if (lead) {
        const double gap = history_pos(*lead, t - config_.delta_rear) - a.history.back().pos;
        if (gap < config_.d_min - 1e-6) m_.audit.push_back({"rear_end", lead->vid, a.vid, t, gap});
      }
      lead = &a;
    }
  }

  // Recorded crossing times of cross-lane pairs at each conflict point.
  void audit_lateral() {
    std::map<int, std::vector<const CrossingRecord*>> by_point;
    for (const auto& c : crossings_) by_point[c.conflict].push_back(&c);
    for (auto& [id, v] : by_point) {
      std::sort(v.begin(), v.end(), [](auto* x, auto* y) { return x->time < y->time; });
      for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = i + 1; j < v.size() && v[j]->time - v[i]->time < config_.delta_lateral; ++j)
          if (v[i]->lane != v[j]->lane && v[j]->time - v[i]->time < config_.delta_lateral - 1e-6)
            m_.audit.push_back({"lateral", v[i]->vid, v[j]->vid, v[j]->time, v[j]->time - v[i]->time});
    }
  }

  void finish() {
    m_.in_zone = active_.size();
    for (const auto& q : queues_) m_.queued += q.size();
    if (!m_.retired.empty()) {
      double s = 0.0, s2 = 0.0;
      for (const auto& r : m_.retired) s += r.travel_time();
      const double n = static_cast<double>(m_.retired.size());
      m_.mean_travel_time = s / n;
      for (const auto& r : m_.retired) s2 += std::pow(r.travel_time() - m_.mean_travel_time, 2);
      m_.std_travel_time = std::sqrt(s2 / n);
    }
    if (m_.solves) m_.mean_evals_per_solve = static_cast<double>(m_.evaluations) / static_cast<double>(m_.solves);
    if (m_.gap_samples) m_.mean_gap = gap_sum_ / static_cast<double>(m_.gap_samples);
    std::vector<double> walls;
    for (const auto& s : m_.steps) walls.push_back(s.wall_seconds);
    if (!walls.empty()) {
      m_.mean_step_seconds = std::accumulate(walls.begin(), walls.end(), 0.0) / static_cast<double>(walls.size());
      m_.p95_step_seconds = percentile(walls, 0.95);
    }
  }
};

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

}  // namespace

SimMetrics run(const ScenarioConfig& config, const ArrivalModel& arrival, const SimOptions& options,
               const SageModel* model) {
  validate(config);
  validate(arrival, config);
  if (!(options.duration > 0.0)) fail(ErrorCode::config, "duration must be positive");
  if (options.solver == SolverKind::gnn && !model) fail(ErrorCode::config, "gnn solver needs a model");
  if (model && model->lane_count() != config.lanes.size())
    fail(ErrorCode::model, "model lane count does not match the scenario");
  return Simulation(config, arrival, options, model).run();
}

void write_metrics(const SimMetrics& m, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& r : m.retired) {
    nlohmann::json j{{"type", "vehicle"},     {"vid", r.vid},
                     {"lane", r.lane},        {"arrival_time", r.arrival_time},
                     {"entry_time", r.entry_time}, {"exit_time", r.exit_time},
                     {"entry_speed", r.entry_speed}, {"travel_time", r.travel_time()}};
    out << j.dump() << '\n';
  }
  nlohmann::json audit = nlohmann::json::array();
  for (const auto& f : m.audit) audit.push_back({{"kind", f.kind}, {"a", f.a}, {"b", f.b}, {"time", f.time}, {"gap", f.value}});
  nlohmann::json s{{"type", "summary"},
                   {"arrived", m.arrived},
                   {"admitted", m.admitted},
                   {"retired", m.retired.size()},
                   {"in_zone", m.in_zone},
                   {"queued", m.queued},
                   {"mean_travel_time", m.mean_travel_time},
                   {"std_travel_time", m.std_travel_time},
                   {"solves", m.solves},
                   {"infeasible_solves", m.infeasible_solves},
                   {"solver_errors", m.solver_errors},
                   {"evaluations", m.evaluations},
                   {"mean_evals_per_solve", m.mean_evals_per_solve},
                   {"mean_gap", m.mean_gap},
                   {"gap_samples", m.gap_samples},
                   {"audit", audit}};
  out << s.dump() << '\n';
}

void write_timing(const SimMetrics& m, const std::filesystem::path& path) {
  auto out = open_out(path);
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : m.steps)
    steps.push_back({{"time", s.time}, {"vehicles", s.vehicles}, {"solves", s.solves},
                     {"evaluations", s.evaluations}, {"wall_ms", s.wall_seconds * 1e3}});
  nlohmann::json j{{"mean_step_ms", m.mean_step_seconds * 1e3}, {"p95_step_ms", m.p95_step_seconds * 1e3},
                   {"steps", steps}};
  out << j.dump(1) << '\n';
}

void write_trajectory(const SimMetrics& m, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "t,vid,lane,pos,speed,accel\n";
  for (const auto& r : m.trajectory)
    out << r.t << ',' << r.vid << ',' << r.lane << ',' << r.pos << ',' << r.speed << ',' << r.accel << '\n';
}

std::size_t generate_dataset(const ScenarioConfig& config, const ArrivalModel& base, const std::vector<double>& rates,
                             double duration, const std::filesystem::path& out_path) {
  if (rates.empty()) fail(ErrorCode::config, "no arrival rates given");
  auto out = open_out(out_path);
  std::int64_t next_id = 0;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    ArrivalModel arrival = base;
    arrival.total_rate_vph = rates[i];
    arrival.seed = base.seed + 0x9E3779B97F4A7C15ULL * i;
    SimOptions opt;
    opt.duration = duration;
    opt.solver = SolverKind::baseline;
    opt.replan = ReplanMode::every_step;
    opt.on_solve = [&](const PlanningInstance& inst, const SolveMap& results) {
      DatasetRecord r;
      r.time = inst.time_now;
      r.exit_pos = config.exit_pos;
      r.v_max = config.v_max;
      r.lane_count = static_cast<int>(config.lanes.size());
      for (const auto& s : inst.states) {
        auto it = results.find(s.vid);
        if (it == results.end() || !it->second.feasible || !it->second.error.empty()) return;
        const auto& range = inst.range(s.vid);
        r.nodes.push_back({s.vid, s.lane, static_cast<int>(config.lane_index(s.lane)), s.pos, s.speed,
                           range.t_lo - inst.time_now, range.t_hi - inst.time_now,
                           it->second.t_exit - inst.time_now});
      }
      r.edges = inst.graph.edges;
      r.id = next_id++;
      out << record_to_json(r).dump() << '\n';
    };
    run(config, arrival, opt);
  }
  if (!out) fail(ErrorCode::io, "write failed: " + out_path.string());
  return static_cast<std::size_t>(next_id);
}

std::vector<BenchRow> bench(const ScenarioConfig& config, const ArrivalModel& base, const std::vector<double>& rates,
                            const std::vector<std::uint64_t>& seeds, double duration, const SageModel* model,
                            const std::function<void(const BenchRow&)>& on_row) {
  if (!model) fail(ErrorCode::config, "bench needs a model for the gnn arms");
  std::vector<BenchRow> rows;
  for (double rate : rates)
    for (auto seed : seeds)
      for (auto solver : {SolverKind::baseline, SolverKind::gnn})
        for (auto replan : {ReplanMode::entry_only, ReplanMode::every_step}) {
          ArrivalModel arrival = base;
          arrival.total_rate_vph = rate;
          arrival.seed = seed;
          SimOptions opt;
          opt.duration = duration;
          opt.solver = solver;
          opt.replan = replan;
          opt.measure_gap = solver == SolverKind::gnn;
          const auto m = run(config, arrival, opt, model);
          BenchRow r;
          r.rate = rate;
          r.seed = seed;
          r.solver = solver;
          r.replan = replan;
          r.retired = m.retired.size();
          r.mean_travel_time = m.mean_travel_time;
          r.std_travel_time = m.std_travel_time;
          r.mean_step_ms = m.mean_step_seconds * 1e3;
          r.p95_step_ms = m.p95_step_seconds * 1e3;
          r.mean_evals = m.mean_evals_per_solve;
          r.mean_gap = m.mean_gap;
          r.audit_flags = m.audit.size();
          r.infeasible_solves = m.infeasible_solves;
          r.solves = m.solves;
          if (on_row) on_row(r);
          rows.push_back(r);
        }
  return rows;
}

void write_bench_csv(const std::vector<BenchRow>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << std::setprecision(10);
  out << "rate,seed,solver,replan,retired,mean_travel_time,std_travel_time,mean_step_ms,p95_step_ms,mean_evals,"
         "mean_gap,audit_flags,infeasible_solves,solves\n";
  for (const auto& r : rows)
    out << r.rate << ',' << r.seed << ',' << to_string(r.solver) << ',' << to_string(r.replan) << ',' << r.retired
        << ',' << r.mean_travel_time << ',' << r.std_travel_time << ',' << r.mean_step_ms << ',' << r.p95_step_ms
        << ',' << r.mean_evals << ',' << r.mean_gap << ',' << r.audit_flags << ',' << r.infeasible_solves << ','
        << r.solves << '\n';
}

}  // namespace cavsched
