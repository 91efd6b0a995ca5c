#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "circuit.hpp"
#include "data.hpp"
#include "features.hpp"

namespace qenc {

struct TrainConfig {
  double lr = 5e-4;
  int batch = 32;
  int epochs = 30;
  uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double train_auc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double val_auc = 0.0;
};

struct TestMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
  double auc = 0.0;
};

struct EvalReport {
  std::vector<EpochStats> epochs;
  double best_val_auc = 0.0;
  int best_epoch = 0;  // 0 means the untrained model (zero-epoch boundary)
  std::optional<TestMetrics> test;
};

std::string report_to_json(const EvalReport& report);
std::string report_to_csv(const EvalReport& report);

// Mann-Whitney AUC with midrank tie handling, computed by exact win/tie
// counting: (wins + ties/2) / (n_pos * n_neg). Requires both classes.
double auc(std::span<const double> scores, std::span<const uint8_t> labels);

// Bias-corrected Adam over one flat parameter vector; step count advances
// once per step() call.
class AdamOptimizer {
 public:
  AdamOptimizer(double lr, double beta1, double beta2, double eps, Eigen::Index size);

  void step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grads);
  long step_count() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
};

// Two-logit softmax head; parameter count is (in_features + 1) * 2.
struct DenseHead {
  Eigen::MatrixXd w;  // in_features x 2
  Eigen::Vector2d b;

  static DenseHead init(Eigen::Index in_features, Rng& rng);
  Eigen::Index param_count() const { return w.size() + b.size(); }
};

// Trains the dense head with softmax cross entropy on feature (or raw-pixel)
// rows. Deterministic for a fixed config.seed. Optional test split is scored
// with the best-validation-epoch parameters.
EvalReport train_dense(const Eigen::MatrixXd& x_train, std::span<const uint8_t> y_train,
                       const Eigen::MatrixXd& x_val, std::span<const uint8_t> y_val,
                       const TrainConfig& cfg, const Eigen::MatrixXd* x_test = nullptr,
                       std::span<const uint8_t> y_test = {});

// Classical CNN baseline: 4 filters of size 2x2 (stride 2, valid) + biases
// (20 parameters), ReLU, then a dense head over the 4 x H/2 x W/2 maps.
EvalReport train_conv(const Dataset& normalized, const TrainConfig& cfg);

constexpr int kConvFilters = 4;
constexpr int kConvK = 2;
constexpr int kConvParamCount = (kConvK * kConvK + 1) * kConvFilters;  // 20

struct SweepEntry {
  double scale = 0.0;
  EvalReport report;
};

struct SweepResult {
  double best_scale = 0.0;
  std::vector<SweepEntry> table;
};

// Retrains per grid point with features re-extracted at that scale; returns
// the argmax of best validation AUC (ties -> smaller scale).
SweepResult sweep_scale(const EncodingCircuit& circuit, const Dataset& normalized, int k,
                        std::span<const double> grid, const TrainConfig& cfg,
                        FeatureCache* cache = nullptr, int jobs = 1);

std::vector<double> default_scale_grid();  // 0.5 .. 2.0 step 0.1

// Splits a row-per-image design matrix by dataset split tags.
struct SplitMatrices {
  Eigen::MatrixXd x_train, x_val, x_test;
  std::vector<uint8_t> y_train, y_val, y_test;
};
SplitMatrices split_design_matrix(const Eigen::MatrixXd& rows, const Dataset& ds);

// Raw-pixel design matrix (one flattened image per row) for the FC baseline.
Eigen::MatrixXd pixel_matrix(const Dataset& ds);

}  // namespace qenc
