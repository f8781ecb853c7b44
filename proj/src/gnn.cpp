#include "cavsched/gnn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "cavsched/error.hpp"
#include "cavsched/rng.hpp"

namespace cavsched {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

NodeFeatures make_features(double pos, double speed, std::size_t lane_index, std::size_t lane_count,
                           double exit_pos, double v_max) {
  NodeFeatures f;
  f.pos_norm = std::clamp(pos / exit_pos, 0.0, 1.0);
  f.speed_norm = speed / v_max;
  f.lane_onehot.assign(lane_count, 0.0);
  if (lane_index >= lane_count) fail(ErrorCode::model, "lane index outside one-hot width");
  f.lane_onehot[lane_index] = 1.0;
  return f;
}

std::size_t SageModel::parameter_count() const {
  std::size_t n = static_cast<std::size_t>(head_w.size()) + 1;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.W.size() + l.b.size());
  return n;
}

SageModel init_model(int feature_dim, int hidden_dim, int num_layers, double exit_pos, double v_max,
                     std::uint64_t seed) {
  if (feature_dim < 3 || hidden_dim < 1 || num_layers < 1)
    fail(ErrorCode::model, "invalid model dimensions");
  Rng rng(seed);
  SageModel m;
  m.feature_dim = feature_dim;
  m.hidden_dim = hidden_dim;
  m.exit_pos = exit_pos;
  m.v_max = v_max;
  int in = feature_dim;
  for (int k = 0; k < num_layers; ++k) {
    SageLayer l;
    l.W.resize(hidden_dim, 2 * in);
    const double lim = std::sqrt(6.0 / (2 * in + hidden_dim));
    for (Eigen::Index i = 0; i < l.W.rows(); ++i)
      for (Eigen::Index j = 0; j < l.W.cols(); ++j) l.W(i, j) = rng.uniform(-lim, lim);
    l.b = VectorXd::Zero(hidden_dim);
    m.layers.push_back(std::move(l));
    in = hidden_dim;
  }
  m.head_w.resize(hidden_dim);
  const double lim = std::sqrt(6.0 / (hidden_dim + 1));
  for (Eigen::Index i = 0; i < m.head_w.size(); ++i) m.head_w(i) = rng.uniform(-lim, lim);
  m.head_b = 0.0;
  return m;
}

SpMat mean_adjacency(int n, std::span<const std::pair<int, int>> edges) {
  std::vector<int> degree(static_cast<std::size_t>(n), 0);
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n || a == b) fail(ErrorCode::model, "invalid edge in graph");
    ++degree[static_cast<std::size_t>(a)];
    ++degree[static_cast<std::size_t>(b)];
  }
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(edges.size() * 2);
  for (const auto& [a, b] : edges) {
    trips.emplace_back(a, b, 1.0 / degree[static_cast<std::size_t>(a)]);
    trips.emplace_back(b, a, 1.0 / degree[static_cast<std::size_t>(b)]);
  }
  SpMat adj(n, n);
  adj.setFromTriplets(trips.begin(), trips.end());
  return adj;
}

namespace {

struct LayerCache {
  MatrixXd h_in;   // n x d_in
  MatrixXd agg;    // n x d_in, neighbour means
  MatrixXd z;      // pre-activation
};

void check_dims(const SageModel& m, const MatrixXd& x, const SpMat& adj) {
  if (x.cols() != m.feature_dim)
    fail(ErrorCode::model, "feature width " + std::to_string(x.cols()) + " != model feature_dim " +
                               std::to_string(m.feature_dim));
  if (adj.rows() != x.rows() || adj.cols() != x.rows()) fail(ErrorCode::model, "adjacency size mismatch");
  if (m.layers.empty() || m.head_w.size() != m.layers.back().W.rows())
    fail(ErrorCode::model, "inconsistent model layers");
}

// Returns final embeddings; fills caches when given.
MatrixXd run_layers(const SageModel& m, const MatrixXd& x, const SpMat& adj, std::vector<LayerCache>* caches) {
  MatrixXd h = x;
  for (const auto& layer : m.layers) {
    const Eigen::Index d = h.cols();
    if (layer.W.cols() != 2 * d) fail(ErrorCode::model, "layer input width mismatch");
    MatrixXd agg = adj * h;
    MatrixXd z = h * layer.W.leftCols(d).transpose() + agg * layer.W.rightCols(d).transpose();
    z.rowwise() += layer.b.transpose();
    MatrixXd out = z.cwiseMax(0.0);
    if (caches) caches->push_back({std::move(h), std::move(agg), std::move(z)});
    h = std::move(out);
  }
  return h;
}

}  // namespace

VectorXd forward(const SageModel& m, const MatrixXd& x, const SpMat& adj) {
  check_dims(m, x, adj);
  const MatrixXd h = run_layers(m, x, adj, nullptr);
  VectorXd out = h * m.head_w;
  out.array() += m.head_b;
  return out;
}

std::vector<double> forward(const SageModel& m, std::span<const NodeFeatures> features, const CoordGraph& graph) {
  if (features.size() != graph.nodes.size()) fail(ErrorCode::model, "feature count != graph node count");
  const int n = static_cast<int>(features.size());
  MatrixXd x(n, m.feature_dim);
  for (int i = 0; i < n; ++i) {
    const auto& f = features[static_cast<std::size_t>(i)];
    if (static_cast<int>(f.lane_onehot.size()) + 2 != m.feature_dim)
      fail(ErrorCode::model, "feature length does not match model feature_dim");
    x(i, 0) = f.pos_norm;
    x(i, 1) = f.speed_norm;
    for (std::size_t k = 0; k < f.lane_onehot.size(); ++k) x(i, static_cast<Eigen::Index>(k + 2)) = f.lane_onehot[k];
  }
  std::unordered_map<VehicleId, int> index;
  for (int i = 0; i < n; ++i) index[graph.nodes[static_cast<std::size_t>(i)]] = i;
  std::vector<std::pair<int, int>> edges;
  for (const auto& [a, b] : graph.edges) {
    auto ia = index.find(a), ib = index.find(b);
    if (ia == index.end() || ib == index.end()) fail(ErrorCode::model, "edge references unknown node");
    edges.emplace_back(ia->second, ib->second);
  }
  const VectorXd out = forward(m, x, mean_adjacency(n, edges));
  return {out.data(), out.data() + out.size()};
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double scale_to_range(double h, double t_lo, double t_hi) {
  if (!(t_hi > t_lo)) return t_lo;
  double t = t_lo + (t_hi - t_lo) * sigmoid(h);
  if (t <= t_lo) t = std::nextafter(t_lo, t_hi);
  if (t >= t_hi) t = std::nextafter(t_hi, t_lo);
  return t;
}

std::map<VehicleId, double> predict_exit_times(const SageModel& model, const PlanningInstance& inst,
                                               const ScenarioConfig& config) {
  std::vector<NodeFeatures> feats;
  feats.reserve(inst.graph.nodes.size());
  for (VehicleId vid : inst.graph.nodes) {
    const auto& s = inst.state(vid);
    feats.push_back(make_features(s.pos, s.speed, config.lane_index(s.lane), model.lane_count(), model.exit_pos,
                                  model.v_max));
  }
  const auto h = forward(model, feats, inst.graph);
  std::map<VehicleId, double> out;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const VehicleId vid = inst.graph.nodes[i];
    const auto& r = inst.range(vid);
    out[vid] = scale_to_range(h[i], r.t_lo, r.t_hi);
  }
  return out;
}

double huber_loss(double pred, double label, double delta) {
  const double e = std::abs(pred - label);
  return e <= delta ? 0.5 * e * e : delta * (e - 0.5 * delta);
}

// ---- dataset -----------------------------------------------------------------

nlohmann::json record_to_json(const DatasetRecord& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["time"] = r.time;
  j["exit_pos"] = r.exit_pos;
  j["v_max"] = r.v_max;
  j["lane_count"] = r.lane_count;
  auto& nodes = j["nodes"] = nlohmann::json::array();
  for (const auto& n : r.nodes)
    nodes.push_back({{"vid", n.vid},
                     {"lane", n.lane},
                     {"lane_index", n.lane_index},
                     {"pos", n.pos},
                     {"speed", n.speed},
                     {"t_lo", n.t_lo},
                     {"t_hi", n.t_hi},
                     {"label", n.label}});
  auto& edges = j["edges"] = nlohmann::json::array();
  for (const auto& [a, b] : r.edges) edges.push_back({a, b});
  return j;
}

DatasetRecord record_from_json(const nlohmann::json& j) {
  DatasetRecord r;
  try {
    r.id = j.at("id").get<std::int64_t>();
    r.time = j.at("time").get<double>();
    r.exit_pos = j.at("exit_pos").get<double>();
    r.v_max = j.at("v_max").get<double>();
    r.lane_count = j.at("lane_count").get<int>();
    for (const auto& n : j.at("nodes")) {
      RecordNode rn;
      rn.vid = n.at("vid").get<VehicleId>();
      rn.lane = n.at("lane").get<LaneId>();
      rn.lane_index = n.at("lane_index").get<int>();
      rn.pos = n.at("pos").get<double>();
      rn.speed = n.at("speed").get<double>();
      rn.t_lo = n.at("t_lo").get<double>();
      rn.t_hi = n.at("t_hi").get<double>();
      rn.label = n.at("label").get<double>();
      r.nodes.push_back(rn);
    }
    for (const auto& e : j.at("edges")) r.edges.emplace_back(e.at(0).get<VehicleId>(), e.at(1).get<VehicleId>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::format, std::string("bad dataset record: ") + e.what());
  }
  if (r.nodes.empty()) fail(ErrorCode::format, "dataset record without nodes");
  for (const auto& n : r.nodes)
    if (n.lane_index < 0 || n.lane_index >= r.lane_count) fail(ErrorCode::format, "lane_index out of range");
  return r;
}

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read dataset " + path.string());
  std::vector<DatasetRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::format, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      fail(e.code(), path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

Batch make_batch(std::span<const DatasetRecord* const> records) {
  std::size_t n = 0;
  int width = 0;
  for (const auto* r : records) {
    n += r->nodes.size();
    width = std::max(width, r->lane_count + 2);
  }
  Batch b;
  b.x = MatrixXd::Zero(static_cast<Eigen::Index>(n), width);
  b.t_lo.resize(static_cast<Eigen::Index>(n));
  b.t_hi.resize(static_cast<Eigen::Index>(n));
  b.label.resize(static_cast<Eigen::Index>(n));
  std::vector<std::pair<int, int>> edges;
  int base = 0;
  for (const auto* r : records) {
    std::unordered_map<VehicleId, int> index;
    for (std::size_t i = 0; i < r->nodes.size(); ++i) {
      const auto& nd = r->nodes[i];
      const int row = base + static_cast<int>(i);
      index[nd.vid] = row;
      b.x(row, 0) = std::clamp(nd.pos / r->exit_pos, 0.0, 1.0);
      b.x(row, 1) = nd.speed / r->v_max;
      b.x(row, 2 + nd.lane_index) = 1.0;
      b.t_lo(row) = nd.t_lo;
      b.t_hi(row) = nd.t_hi;
      b.label(row) = nd.label;
    }
    for (const auto& [a, c] : r->edges) {
      auto ia = index.find(a), ic = index.find(c);
      if (ia == index.end() || ic == index.end()) fail(ErrorCode::format, "record edge references unknown vehicle");
      edges.emplace_back(ia->second, ic->second);
    }
    base += static_cast<int>(r->nodes.size());
  }
  b.adj = mean_adjacency(static_cast<int>(n), edges);
  return b;
}

double batch_loss(const SageModel& m, const Batch& batch, double delta, Gradients* grad) {
  check_dims(m, batch.x, batch.adj);
  std::vector<LayerCache> caches;
  const MatrixXd h = run_layers(m, batch.x, batch.adj, grad ? &caches : nullptr);
  VectorXd out = h * m.head_w;
  out.array() += m.head_b;

  const auto n = out.size();
  if (n == 0) return 0.0;
  double loss = 0.0;
  VectorXd d_out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = sigmoid(out(i));
    const double w = batch.t_hi(i) - batch.t_lo(i);
    const double pred = batch.t_lo(i) + w * s;
    const double e = pred - batch.label(i);
    loss += huber_loss(pred, batch.label(i), delta);
    const double dl = std::abs(e) <= delta ? e : (e > 0 ? delta : -delta);
    d_out(i) = dl * w * s * (1.0 - s) / static_cast<double>(n);
  }
  loss /= static_cast<double>(n);
  if (!grad) return loss;

  grad->head_w = h.transpose() * d_out;
  grad->head_b = d_out.sum();
  grad->layers.resize(m.layers.size());
  MatrixXd d_h = d_out * m.head_w.transpose();
  for (std::size_t k = m.layers.size(); k-- > 0;) {
    const auto& layer = m.layers[k];
    const auto& c = caches[k];
    const Eigen::Index d = c.h_in.cols();
    const MatrixXd d_z = (c.z.array() > 0.0).select(d_h, 0.0);
    auto& g = grad->layers[k];
    g.W.resize(layer.W.rows(), layer.W.cols());
    g.W.leftCols(d) = d_z.transpose() * c.h_in;
    g.W.rightCols(d) = d_z.transpose() * c.agg;
    g.b = d_z.colwise().sum().transpose();
    if (k > 0) {
      const MatrixXd d_agg = d_z * layer.W.rightCols(d);
      d_h = d_z * layer.W.leftCols(d) + SpMat(batch.adj.transpose()) * d_agg;
    }
  }
  return loss;
}

double evaluate_loss(const SageModel& m, std::span<const DatasetRecord* const> records, double delta) {
  double total = 0.0;
  std::size_t nodes = 0;
  constexpr std::size_t kChunk = 1024;
  for (std::size_t i = 0; i < records.size(); i += kChunk) {
    const auto part = records.subspan(i, std::min(kChunk, records.size() - i));
    const Batch b = make_batch(part);
    total += batch_loss(m, b, delta) * static_cast<double>(b.label.size());
    nodes += static_cast<std::size_t>(b.label.size());
  }
  return nodes ? total / static_cast<double>(nodes) : 0.0;
}

// ---- training ------------------------------------------------------------------

namespace {

class Adam {
 public:
  Adam(const SageModel& m, double lr) : lr_(lr) {
    for (const auto& l : m.layers) {
      m_.layers.push_back({MatrixXd::Zero(l.W.rows(), l.W.cols()), VectorXd::Zero(l.b.size())});
      v_.layers.push_back({MatrixXd::Zero(l.W.rows(), l.W.cols()), VectorXd::Zero(l.b.size())});
    }
    m_.head_w = v_.head_w = VectorXd::Zero(m.head_w.size());
  }

  void step(SageModel& model, const Gradients& g) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    for (std::size_t k = 0; k < model.layers.size(); ++k) {
      update(model.layers[k].W, g.layers[k].W, m_.layers[k].W, v_.layers[k].W, c1, c2);
      update(model.layers[k].b, g.layers[k].b, m_.layers[k].b, v_.layers[k].b, c1, c2);
    }
    update(model.head_w, g.head_w, m_.head_w, v_.head_w, c1, c2);
    mb_ = kBeta1 * mb_ + (1 - kBeta1) * g.head_b;
    vb_ = kBeta2 * vb_ + (1 - kBeta2) * g.head_b * g.head_b;
    model.head_b -= lr_ * (mb_ / c1) / (std::sqrt(vb_ / c2) + kEps);
  }

 private:
  static constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;

  template <class P>
  void update(P& p, const P& g, P& m, P& v, double c1, double c2) {
    m = kBeta1 * m + (1 - kBeta1) * g;
    v = kBeta2 * v + (1 - kBeta2) * g.cwiseProduct(g);
    p.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + kEps);
  }

  double lr_;
  int t_ = 0;
  Gradients m_, v_;
  double mb_ = 0.0, vb_ = 0.0;
};

}  // namespace

SageModel train(const std::vector<DatasetRecord>& dataset, const TrainOptions& opt, TrainReport* report,
                const std::function<void(const EpochStats&)>& on_epoch) {
  if (dataset.empty()) fail(ErrorCode::config, "empty dataset");
  if (!(opt.split > 0.0 && opt.split < 1.0)) fail(ErrorCode::config, "split must be in (0, 1)");
  if (opt.batch_size < 1 || opt.max_epochs < 1) fail(ErrorCode::config, "batch size and epochs must be positive");

  Rng rng(opt.seed);
  std::vector<const DatasetRecord*> order;
  order.reserve(dataset.size());
  for (const auto& r : dataset) order.push_back(&r);
  rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(std::llround(opt.split * static_cast<double>(order.size())));
  if (n_train == 0 || n_train >= order.size())
    fail(ErrorCode::config, "train/validation split leaves an empty side (" + std::to_string(order.size()) +
                                " records)");
  std::vector<const DatasetRecord*> train_set(order.begin(), order.begin() + static_cast<long>(n_train));
  std::vector<const DatasetRecord*> val_set(order.begin() + static_cast<long>(n_train), order.end());

  const int lane_count = dataset.front().lane_count;
  for (const auto& r : dataset)
    if (r.lane_count != lane_count) fail(ErrorCode::config, "records disagree on lane count");
  SageModel model = init_model(lane_count + 2, opt.hidden_dim, opt.layers, dataset.front().exit_pos,
                               dataset.front().v_max, opt.seed ^ 0x5a6e5a6eULL);

  // Start the head at the mean normalized label so early epochs are not spent
  // walking the sigmoid out of saturation.
  {
    double q = 0.0;
    std::size_t n = 0;
    for (const auto* r : train_set)
      for (const auto& nd : r->nodes) {
        const double w = nd.t_hi - nd.t_lo;
        if (w > 0) q += std::clamp((nd.label - nd.t_lo) / w, 1e-6, 1 - 1e-6), ++n;
      }
    q = n ? q / static_cast<double>(n) : 0.5;
    model.head_b = std::log(q / (1.0 - q));
  }

  Adam adam(model, opt.learning_rate);
  SageModel best = model;
  TrainReport rep;
  rep.train_size = train_set.size();
  rep.val_size = val_set.size();
  rep.best_val_loss = std::numeric_limits<double>::infinity();
  int stagnant = 0;
  Gradients grad;

  for (int epoch = 1; epoch <= opt.max_epochs; ++epoch) {
    rng.shuffle(train_set);
    double loss_sum = 0.0;
    std::size_t node_sum = 0;
    for (std::size_t i = 0; i < train_set.size(); i += static_cast<std::size_t>(opt.batch_size)) {
      const auto part = std::span<const DatasetRecord* const>(train_set).subspan(
          i, std::min<std::size_t>(static_cast<std::size_t>(opt.batch_size), train_set.size() - i));
      const Batch b = make_batch(part);
      const double l = batch_loss(model, b, opt.huber_delta, &grad);
      adam.step(model, grad);
      loss_sum += l * static_cast<double>(b.label.size());
      node_sum += static_cast<std::size_t>(b.label.size());
    }
    EpochStats st{epoch, loss_sum / static_cast<double>(node_sum), evaluate_loss(model, val_set, opt.huber_delta)};
    rep.curve.push_back(st);
    if (on_epoch) on_epoch(st);
    if (st.val_loss < rep.best_val_loss) {
      rep.best_val_loss = st.val_loss;
      rep.best_epoch = epoch;
      rep.train_loss_at_best = st.train_loss;
      best = model;
      stagnant = 0;
    } else if (++stagnant >= opt.patience) {
      break;
    }
  }
  if (report) *report = std::move(rep);
  return best;
}

// ---- model file ----------------------------------------------------------------

namespace {

void write_row(std::ostream& os, const double* v, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) os << (i ? " " : "") << v[i];
  os << '\n';
}

}  // namespace

void save_model(const SageModel& m, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::io, "cannot write model file " + path.string());
  os << std::setprecision(17);
  os << "CAVSAGE " << kModelFormatVersion << '\n';
  os << "dims " << m.feature_dim << ' ' << m.hidden_dim << ' ' << m.layers.size() << '\n';
  os << "norm " << m.exit_pos << ' ' << m.v_max << '\n';
  for (std::size_t k = 0; k < m.layers.size(); ++k) {
    const auto& l = m.layers[k];
    os << "layer " << k << ' ' << l.W.rows() << ' ' << l.W.cols() << '\n';
    for (Eigen::Index r = 0; r < l.W.rows(); ++r) {
      const Eigen::RowVectorXd row = l.W.row(r);
      write_row(os, row.data(), row.size());
    }
    write_row(os, l.b.data(), l.b.size());
  }
  os << "head " << m.head_w.size() << '\n';
  write_row(os, m.head_w.data(), m.head_w.size());
  os << m.head_b << '\n';
  os << "end\n";
  if (!os) fail(ErrorCode::io, "write failed for " + path.string());
}

SageModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::io, "cannot read model file " + path.string());
  auto malformed = [&](const std::string& what) -> void {
    fail(ErrorCode::format, path.string() + ": malformed model file (" + what + ")");
  };
  auto expect = [&](const std::string& word) {
    std::string w;
    if (!(is >> w) || w != word) malformed("expected '" + word + "'");
  };
  auto number = [&](double& x) {
    std::string tok;
    if (!(is >> tok)) malformed("truncated");
    char* end = nullptr;
    x = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) malformed("bad number '" + tok + "'");
  };
  auto integer = [&](long& x) {
    if (!(is >> x)) malformed("truncated");
  };

  expect("CAVSAGE");
  long version = 0;
  integer(version);
  if (version != kModelFormatVersion)
    fail(ErrorCode::version, path.string() + ": unsupported model format version " + std::to_string(version));

  SageModel m;
  long feat = 0, hidden = 0, nlayers = 0;
  expect("dims");
  integer(feat);
  integer(hidden);
  integer(nlayers);
  if (feat < 3 || hidden < 1 || nlayers < 1 || nlayers > 64) malformed("bad dimensions");
  m.feature_dim = static_cast<int>(feat);
  m.hidden_dim = static_cast<int>(hidden);
  expect("norm");
  number(m.exit_pos);
  number(m.v_max);
  long in = feat;
  for (long k = 0; k < nlayers; ++k) {
    expect("layer");
    long idx = 0, rows = 0, cols = 0;
    integer(idx);
    integer(rows);
    integer(cols);
    if (idx != k || rows != hidden || cols != 2 * in) malformed("layer " + std::to_string(k) + " dimensions");
    SageLayer l;
    l.W.resize(rows, cols);
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < cols; ++c) number(l.W(r, c));
    l.b.resize(rows);
    for (long r = 0; r < rows; ++r) number(l.b(r));
    m.layers.push_back(std::move(l));
    in = hidden;
  }
  expect("head");
  long hw = 0;
  integer(hw);
  if (hw != hidden) malformed("head width");
  m.head_w.resize(hw);
  for (long i = 0; i < hw; ++i) number(m.head_w(i));
  number(m.head_b);
  expect("end");
  return m;
}

}  // namespace cavsched
