#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cavsched/error.hpp"
#include "cavsched/gnn.hpp"
#include "cavsched/rng.hpp"

using namespace cavsched;
using Eigen::MatrixXd;

namespace {

std::vector<std::pair<int, int>> path3() { return {{0, 1}, {1, 2}}; }

// Width-1, two-layer model on one lane: feature_dim 3.
SageModel tiny_model() {
  SageModel m;
  m.feature_dim = 3;
  m.hidden_dim = 1;
  SageLayer l1;
  l1.W.resize(1, 6);
  l1.W << 1.0, -2.0, 0.5, 0.5, 1.0, -1.0;
  l1.b = Eigen::VectorXd::Constant(1, 1.0);
  SageLayer l2;
  l2.W.resize(1, 2);
  l2.W << 2.0, 1.0;
  l2.b = Eigen::VectorXd::Constant(1, 0.3);
  m.layers = {l1, l2};
  m.head_w = Eigen::VectorXd::Constant(1, 1.5);
  m.head_b = -0.2;
  return m;
}

DatasetRecord sample_record(Rng& rng, std::int64_t id) {
  DatasetRecord r;
  r.id = id;
  r.time = 10.0 * static_cast<double>(id);
  r.lane_count = 4;
  const int n = 2 + static_cast<int>(rng.index(5));
  for (int i = 0; i < n; ++i) {
    RecordNode nd;
    nd.vid = 100 + i;
    nd.lane_index = static_cast<int>(rng.index(4));
    nd.lane = nd.lane_index;
    nd.pos = rng.uniform(0.0, 240.0);
    nd.speed = rng.uniform(2.0, 20.0);
    nd.t_lo = rng.uniform(1.0, 12.0);
    nd.t_hi = nd.t_lo + rng.uniform(5.0, 60.0);
    nd.label = rng.uniform(nd.t_lo, nd.t_lo + 8.0);
    r.nodes.push_back(nd);
  }
  for (int i = 0; i + 1 < n; ++i) r.edges.emplace_back(100 + i, 100 + i + 1);
  if (n > 2) r.edges.emplace_back(100, 100 + n - 1);
  return r;
}

double& param(SageModel& m, int which, Eigen::Index i) {
  const int nl = static_cast<int>(m.layers.size());
  if (which < 2 * nl) {
    auto& l = m.layers[static_cast<std::size_t>(which / 2)];
    return which % 2 == 0 ? l.W.data()[i] : l.b.data()[i];
  }
  if (which == 2 * nl) return m.head_w.data()[i];
  return m.head_b;
}

double grad_of(const Gradients& g, int which, Eigen::Index i) {
  const int nl = static_cast<int>(g.layers.size());
  if (which < 2 * nl) {
    const auto& l = g.layers[static_cast<std::size_t>(which / 2)];
    return which % 2 == 0 ? l.W.data()[i] : l.b.data()[i];
  }
  if (which == 2 * nl) return g.head_w.data()[i];
  return g.head_b;
}

}  // namespace

TEST_CASE("hand-unrolled forward on a three-node path") {
  // Layer 1 pre-activations 3/20, 7/5, -1/4; layer 2 gives 2, 127/40, 17/10.
  MatrixXd x(3, 3);
  x << 0.2, 0.5, 1.0, 0.4, 0.25, 1.0, 0.8, 1.0, 1.0;
  const auto edges = path3();
  const auto out = forward(tiny_model(), x, mean_adjacency(3, edges));
  REQUIRE(out.size() == 3);
  CHECK(out(0) == doctest::Approx(14.0 / 5.0).epsilon(1e-14));
  CHECK(out(1) == doctest::Approx(73.0 / 16.0).epsilon(1e-14));
  CHECK(out(2) == doctest::Approx(47.0 / 20.0).epsilon(1e-14));
}

TEST_CASE("mean adjacency") {
  const std::vector<std::pair<int, int>> edges{{0, 1}, {0, 2}, {0, 3}};
  const MatrixXd a = MatrixXd(mean_adjacency(5, edges));
  CHECK(a(0, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(a(0, 3) == doctest::Approx(1.0 / 3.0));
  CHECK(a(2, 0) == 1.0);
  CHECK(a.row(4).sum() == 0.0);  // isolated
  CHECK(a.row(0).sum() == doctest::Approx(1.0));
  const std::vector<std::pair<int, int>> self{{1, 1}};
  CHECK_THROWS_AS(mean_adjacency(3, self), Error);
  const std::vector<std::pair<int, int>> outside{{0, 3}};
  CHECK_THROWS_AS(mean_adjacency(3, outside), Error);
}

TEST_CASE("relabelling nodes permutes the output") {
  const auto m = init_model(6, 8, 3, 250.0, 20.0, 11);
  Rng rng(5);
  const int n = 6;
  MatrixXd x = MatrixXd::Zero(n, 6);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform();
    x(i, 1) = rng.uniform();
    x(i, 2 + static_cast<int>(rng.index(4))) = 1.0;
  }
  const std::vector<std::pair<int, int>> edges{{0, 1}, {1, 2}, {2, 3}, {0, 4}, {4, 5}, {1, 5}};
  const std::vector<int> perm{3, 0, 5, 1, 4, 2};  // new index of old node i
  MatrixXd xp(n, 6);
  for (int i = 0; i < n; ++i) xp.row(perm[i]) = x.row(i);
  std::vector<std::pair<int, int>> ep;
  for (auto [a, b] : edges) ep.emplace_back(perm[a], perm[b]);
  const auto y = forward(m, x, mean_adjacency(n, edges));
  const auto yp = forward(m, xp, mean_adjacency(n, ep));
  for (int i = 0; i < n; ++i) CHECK(yp(perm[i]) == doctest::Approx(y(i)).epsilon(1e-12));
}

TEST_CASE("node features") {
  const auto f = make_features(125.0, 10.0, 2, 4, 250.0, 20.0);
  CHECK(f.pos_norm == 0.5);
  CHECK(f.speed_norm == 0.5);
  CHECK(f.lane_onehot == std::vector<double>{0, 0, 1, 0});
  CHECK(make_features(300.0, 10.0, 0, 4, 250.0, 20.0).pos_norm == 1.0);
  CHECK_THROWS_AS(make_features(0.0, 0.0, 4, 4, 250.0, 20.0), Error);
}

TEST_CASE("range scaling") {
  CHECK(scale_to_range(0.0, 10.0, 20.0) == doctest::Approx(15.0));
  CHECK(scale_to_range(std::log(3.0), 10.0, 30.0) == doctest::Approx(25.0));
  const double hi = scale_to_range(1000.0, 10.0, 20.0);
  const double lo = scale_to_range(-1000.0, 10.0, 20.0);
  CHECK(hi < 20.0);
  CHECK(hi > 19.999);
  CHECK(lo > 10.0);
  CHECK(lo < 10.001);
  CHECK(scale_to_range(3.0, 7.0, 7.0) == 7.0);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) == 1.0);
}

TEST_CASE("huber") {
  CHECK(huber_loss(1.5, 1.0) == doctest::Approx(0.125));
  CHECK(huber_loss(3.0, 1.0) == doctest::Approx(1.5));
  CHECK(huber_loss(-1.0, 1.0) == doctest::Approx(1.5));
  CHECK(huber_loss(3.0, 1.0, 0.5) == doctest::Approx(0.875));
}

TEST_CASE("analytic gradients match central differences") {
  Rng rng(9);
  std::vector<DatasetRecord> recs;
  for (int i = 0; i < 4; ++i) recs.push_back(sample_record(rng, i));
  std::vector<const DatasetRecord*> ptrs;
  for (const auto& r : recs) ptrs.push_back(&r);
  const Batch batch = make_batch(ptrs);
  auto m = init_model(6, 4, 2, 250.0, 20.0, 21);
  m.head_b = 0.3;
  for (double delta : {1.0, 0.05}) {
    Gradients g;
    batch_loss(m, batch, delta, &g);
    const int groups = 2 * static_cast<int>(m.layers.size()) + 2;
    for (int which = 0; which < groups; ++which) {
      Eigen::Index count = 1;
      if (which < 2 * static_cast<int>(m.layers.size())) {
        const auto& l = m.layers[static_cast<std::size_t>(which / 2)];
        count = which % 2 == 0 ? l.W.size() : l.b.size();
      } else if (which == groups - 2) {
        count = m.head_w.size();
      }
      for (Eigen::Index i = 0; i < count; ++i) {
        double& p = param(m, which, i);
        const double keep = p;
        const double h = 1e-6;
        p = keep + h;
        const double up = batch_loss(m, batch, delta);
        p = keep - h;
        const double down = batch_loss(m, batch, delta);
        p = keep;
        const double fd = (up - down) / (2 * h);
        CHECK(grad_of(g, which, i) == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
      }
    }
  }
}

TEST_CASE("model file round trip is exact") {
  const auto m = init_model(6, 5, 3, 250.0, 20.0, 4);
  const auto path = std::filesystem::temp_directory_path() / "cavsched_test_model.sage";
  save_model(m, path);
  const auto back = load_model(path);
  CHECK(back.feature_dim == 6);
  CHECK(back.hidden_dim == 5);
  REQUIRE(back.layers.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(back.layers[k].W == m.layers[k].W);
    CHECK(back.layers[k].b == m.layers[k].b);
  }
  CHECK(back.head_w == m.head_w);
  CHECK(back.head_b == m.head_b);
  CHECK(back.parameter_count() == m.parameter_count());

  std::string text;
  {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  auto code_of = [&](const std::string& body) {
    std::ofstream(path) << body;
    try {
      load_model(path);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::internal;
  };
  CHECK(code_of(text.substr(0, text.size() / 2)) == ErrorCode::format);
  CHECK(code_of("CAVSAGE 99\n") == ErrorCode::version);
  CHECK(code_of("not a model\n") == ErrorCode::format);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_model(path), Error);
}

TEST_CASE("dataset record json round trip") {
  Rng rng(2);
  const auto r = sample_record(rng, 7);
  const auto back = record_from_json(record_to_json(r));
  CHECK(record_to_json(back) == record_to_json(r));
  auto j = record_to_json(r);
  j["nodes"][0]["lane_index"] = 9;
  CHECK_THROWS_AS(record_from_json(j), Error);
  j = record_to_json(r);
  j.erase("edges");
  CHECK_THROWS_AS(record_from_json(j), Error);
}

TEST_CASE("training fits a constant normalized target") {
  // Every label sits 30% of the way into its range; the head bias alone can
  // represent that exactly.
  Rng rng(4);
  std::vector<DatasetRecord> recs;
  for (int i = 0; i < 200; ++i) {
    auto r = sample_record(rng, i);
    for (auto& nd : r.nodes) nd.label = nd.t_lo + 0.3 * (nd.t_hi - nd.t_lo);
    recs.push_back(r);
  }
  TrainOptions opt;
  opt.hidden_dim = 8;
  opt.layers = 2;
  opt.max_epochs = 40;
  opt.batch_size = 32;
  opt.learning_rate = 3e-3;
  opt.seed = 3;
  TrainReport rep;
  int calls = 0;
  const auto m = train(recs, opt, &rep, [&](const EpochStats&) { ++calls; });
  CHECK(calls == static_cast<int>(rep.curve.size()));
  CHECK(rep.train_size == 180);
  CHECK(rep.val_size == 20);
  CHECK(rep.best_val_loss < 0.05);
  CHECK(rep.best_val_loss < rep.curve.front().val_loss + 1e-12);

  std::vector<const DatasetRecord*> ptrs;
  for (const auto& r : recs) ptrs.push_back(&r);
  CHECK(evaluate_loss(m, ptrs, 1.0) < 0.1);
}

TEST_CASE("training rejects bad options") {
  Rng rng(1);
  std::vector<DatasetRecord> recs{sample_record(rng, 0)};
  TrainOptions opt;
  CHECK_THROWS_AS(train({}, opt), Error);
  CHECK_THROWS_AS(train(recs, opt), Error);  // one record cannot be split
  recs.push_back(sample_record(rng, 1));
  opt.split = 1.0;
  CHECK_THROWS_AS(train(recs, opt), Error);
}
