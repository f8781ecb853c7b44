#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "cavsched/planner.hpp"
#include "cavsched/scenario.hpp"

namespace cavsched {

struct NodeFeatures {
  double pos_norm = 0.0;
  double speed_norm = 0.0;
  std::vector<double> lane_onehot;
};

NodeFeatures make_features(double pos, double speed, std::size_t lane_index, std::size_t lane_count,
                           double exit_pos, double v_max);

struct SageLayer {
  Eigen::MatrixXd W;  // out x (2 * in): [self | neighbour mean]
  Eigen::VectorXd b;
};

struct SageModel {
  int feature_dim = 0;
  int hidden_dim = 0;
  std::vector<SageLayer> layers;
  Eigen::VectorXd head_w;
  double head_b = 0.0;
  double exit_pos = 250.0;  // feature normalization constants
  double v_max = 20.0;

  std::size_t lane_count() const { return static_cast<std::size_t>(feature_dim - 2); }
  std::size_t parameter_count() const;
};

SageModel init_model(int feature_dim, int hidden_dim, int num_layers, double exit_pos, double v_max,
                     std::uint64_t seed);

// Row-normalized adjacency; rows of isolated nodes stay zero so their
// neighbour aggregate is the zero vector.
Eigen::SparseMatrix<double, Eigen::RowMajor> mean_adjacency(int n, std::span<const std::pair<int, int>> edges);

// h^K for every row of `x`.
Eigen::VectorXd forward(const SageModel& model, const Eigen::MatrixXd& x,
                        const Eigen::SparseMatrix<double, Eigen::RowMajor>& adj);

// One output per graph node, in graph.nodes order; features aligned with it.
std::vector<double> forward(const SageModel& model, std::span<const NodeFeatures> features, const CoordGraph& graph);

double sigmoid(double x);

// t_lo + (t_hi - t_lo) * sigmoid(h), kept strictly inside (t_lo, t_hi).
double scale_to_range(double h, double t_lo, double t_hi);

std::map<VehicleId, double> predict_exit_times(const SageModel& model, const PlanningInstance& instance,
                                               const ScenarioConfig& config);

double huber_loss(double pred, double label, double delta = 1.0);

// ---- dataset ---------------------------------------------------------------

struct RecordNode {
  VehicleId vid = 0;
  LaneId lane = 0;
  int lane_index = 0;
  double pos = 0.0;
  double speed = 0.0;
  double t_lo = 0.0;  // durations from the record's time
  double t_hi = 0.0;
  double label = 0.0;
};

struct DatasetRecord {
  std::int64_t id = 0;
  double time = 0.0;
  double exit_pos = 250.0;
  double v_max = 20.0;
  int lane_count = 0;
  std::vector<RecordNode> nodes;
  std::vector<std::pair<VehicleId, VehicleId>> edges;
};

nlohmann::json record_to_json(const DatasetRecord& r);
DatasetRecord record_from_json(const nlohmann::json& j);
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path);

// Many records flattened into one block-diagonal graph.
struct Batch {
  Eigen::MatrixXd x;
  Eigen::SparseMatrix<double, Eigen::RowMajor> adj;
  Eigen::VectorXd t_lo, t_hi, label;
};

Batch make_batch(std::span<const DatasetRecord* const> records);

struct Gradients {
  std::vector<SageLayer> layers;
  Eigen::VectorXd head_w;
  double head_b = 0.0;
};

// Mean Huber loss of the range-scaled predictions; fills `grad` if given.
double batch_loss(const SageModel& model, const Batch& batch, double delta, Gradients* grad = nullptr);

// ---- training --------------------------------------------------------------

struct TrainOptions {
  int hidden_dim = 256;
  int layers = 3;
  int max_epochs = 200;
  int batch_size = 256;
  double learning_rate = 1e-3;
  double huber_delta = 1.0;
  double split = 0.9;
  int patience = 20;
  std::uint64_t seed = 1;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> curve;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  double train_loss_at_best = 0.0;
};

SageModel train(const std::vector<DatasetRecord>& dataset, const TrainOptions& options, TrainReport* report = nullptr,
                const std::function<void(const EpochStats&)>& on_epoch = {});

// Mean Huber loss over a set of records.
double evaluate_loss(const SageModel& model, std::span<const DatasetRecord* const> records, double delta);

// ---- model file --------------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

void save_model(const SageModel& model, const std::filesystem::path& path);
SageModel load_model(const std::filesystem::path& path);

}  // namespace cavsched
