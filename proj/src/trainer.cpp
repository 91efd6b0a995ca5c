#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "common.hpp"

namespace qenc {

double auc(std::span<const double> scores, std::span<const uint8_t> labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw_data("auc: scores and labels must be non-empty and equal length");
  }
  const size_t n = scores.size();
  size_t n_pos = 0;
  for (uint8_t y : labels) n_pos += y;
  const size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw_data("auc: both classes must be present");

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // Exact integer counting over tie groups: a positive scores a win against
  // every negative strictly below it and half a win per tied negative.
  unsigned long long wins = 0;
  unsigned long long ties = 0;
  unsigned long long neg_below = 0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    unsigned long long pos_in = 0;
    unsigned long long neg_in = 0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]]) {
        ++pos_in;
      } else {
        ++neg_in;
      }
      ++j;
    }
    wins += pos_in * neg_below;
    ties += pos_in * neg_in;
    neg_below += neg_in;
    i = j;
  }
  return (static_cast<double>(wins) + 0.5 * static_cast<double>(ties)) /
         (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

AdamOptimizer::AdamOptimizer(double lr, double beta1, double beta2, double eps,
                             Eigen::Index size)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_ = Eigen::VectorXd::Zero(size);
  v_ = Eigen::VectorXd::Zero(size);
}

void AdamOptimizer::step(Eigen::Ref<Eigen::VectorXd> params,
                         const Eigen::Ref<const Eigen::VectorXd>& grads) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grads;
  v_ = beta2_ * v_.array().matrix() + (1.0 - beta2_) * grads.array().square().matrix();
  const double bias1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -=
      lr_ * (m_.array() / bias1) / ((v_.array() / bias2).sqrt() + eps_);
}

DenseHead DenseHead::init(Eigen::Index in_features, Rng& rng) {
  DenseHead head;
  head.w.resize(in_features, 2);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_features));
  for (Eigen::Index i = 0; i < in_features; ++i) {
    for (int j = 0; j < 2; ++j) head.w(i, j) = uniform_real(rng, -bound, bound);
  }
  for (int j = 0; j < 2; ++j) head.b(j) = uniform_real(rng, -bound, bound);
  return head;
}

namespace {

struct BatchEval {
  double loss = 0.0;
  Eigen::MatrixXd dlogits;  // batch x 2, already divided by batch size
};

Eigen::MatrixXd head_logits(const DenseHead& head, const Eigen::MatrixXd& x) {
  return (x * head.w).rowwise() + head.b.transpose();
}

// Softmax cross entropy, numerically stabilized by the row max.
double ce_loss_and_grad(const Eigen::MatrixXd& logits, std::span<const uint8_t> y,
                        Eigen::MatrixXd* dlogits) {
  const Eigen::Index n = logits.rows();
  if (dlogits) dlogits->resize(n, 2);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = std::max(logits(i, 0), logits(i, 1));
    const double e0 = std::exp(logits(i, 0) - m);
    const double e1 = std::exp(logits(i, 1) - m);
    const double z = e0 + e1;
    const double p0 = e0 / z;
    const double p1 = e1 / z;
    loss -= std::log(y[i] ? p1 : p0);
    if (dlogits) {
      (*dlogits)(i, 0) = (p0 - (y[i] ? 0.0 : 1.0)) / static_cast<double>(n);
      (*dlogits)(i, 1) = (p1 - (y[i] ? 1.0 : 0.0)) / static_cast<double>(n);
    }
  }
  return loss / static_cast<double>(n);
}

std::vector<double> class1_scores(const Eigen::MatrixXd& logits) {
  std::vector<double> scores(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    // Softmax probability of class 1; monotone in the logit gap.
    scores[i] = 1.0 / (1.0 + std::exp(logits(i, 0) - logits(i, 1)));
  }
  return scores;
}

double accuracy_of(const Eigen::MatrixXd& logits, std::span<const uint8_t> y) {
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int pred = logits(i, 1) > logits(i, 0) ? 1 : 0;
    correct += (pred == y[i]);
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

struct SetMetrics {
  double loss, acc, auc_value;
};

SetMetrics score_set(const DenseHead& head, const Eigen::MatrixXd& x,
                     std::span<const uint8_t> y) {
  const Eigen::MatrixXd logits = head_logits(head, x);
  SetMetrics m;
  m.loss = ce_loss_and_grad(logits, y, nullptr);
  m.acc = accuracy_of(logits, y);
  m.auc_value = auc(class1_scores(logits), y);
  return m;
}

void check_split(std::span<const uint8_t> y, const char* name) {
  size_t pos = 0;
  for (uint8_t v : y) pos += v;
  if (pos == 0 || pos == y.size()) {
    throw_data(std::string(name) + " split must contain both classes");
  }
}

}  // namespace

EvalReport train_dense(const Eigen::MatrixXd& x_train, std::span<const uint8_t> y_train,
                       const Eigen::MatrixXd& x_val, std::span<const uint8_t> y_val,
                       const TrainConfig& cfg, const Eigen::MatrixXd* x_test,
                       std::span<const uint8_t> y_test) {
  if (x_train.rows() != static_cast<Eigen::Index>(y_train.size()) ||
      x_val.rows() != static_cast<Eigen::Index>(y_val.size())) {
    throw_data("train: design matrix and label length mismatch");
  }
  if (x_train.rows() == 0 || x_val.rows() == 0) throw_data("train: empty split");
  check_split(y_val, "validation");
  check_split(y_train, "train");

  const Eigen::Index dim = x_train.cols();
  Rng init_rng = make_rng(derive_seed(cfg.seed, 0x1217));
  Rng shuffle_rng = make_rng(derive_seed(cfg.seed, 0x5417));
  DenseHead head = DenseHead::init(dim, init_rng);
  AdamOptimizer opt(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, head.param_count());

  EvalReport report;
  DenseHead best = head;
  report.best_val_auc = score_set(head, x_val, y_val).auc_value;
  report.best_epoch = 0;

  std::vector<int> order(x_train.rows());
  std::iota(order.begin(), order.end(), 0);

  Eigen::VectorXd flat_grad(head.param_count());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (size_t start = 0; start < order.size(); start += cfg.batch) {
      const size_t count = std::min<size_t>(cfg.batch, order.size() - start);
      Eigen::MatrixXd xb(count, dim);
      std::vector<uint8_t> yb(count);
      for (size_t i = 0; i < count; ++i) {
        xb.row(i) = x_train.row(order[start + i]);
        yb[i] = y_train[order[start + i]];
      }
      Eigen::MatrixXd dlogits;
      const double loss = ce_loss_and_grad(head_logits(head, xb), yb, &dlogits);
      if (!std::isfinite(loss)) {
        throw_runtime("NaN loss at epoch " + std::to_string(epoch));
      }
      const Eigen::MatrixXd dw = xb.transpose() * dlogits;
      const Eigen::Vector2d db = dlogits.colwise().sum();
      flat_grad.head(dw.size()) = Eigen::Map<const Eigen::VectorXd>(dw.data(), dw.size());
      flat_grad.tail(2) = db;
      Eigen::VectorXd flat_params(head.param_count());
      flat_params.head(head.w.size()) =
          Eigen::Map<const Eigen::VectorXd>(head.w.data(), head.w.size());
      flat_params.tail(2) = head.b;
      opt.step(flat_params, flat_grad);
      Eigen::Map<Eigen::VectorXd>(head.w.data(), head.w.size()) =
          flat_params.head(head.w.size());
      head.b = flat_params.tail(2);
    }

    EpochStats stats;
    stats.epoch = epoch;
    const SetMetrics train_m = score_set(head, x_train, y_train);
    const SetMetrics val_m = score_set(head, x_val, y_val);
    stats.train_loss = train_m.loss;
    stats.train_acc = train_m.acc;
    stats.train_auc = train_m.auc_value;
    stats.val_loss = val_m.loss;
    stats.val_acc = val_m.acc;
    stats.val_auc = val_m.auc_value;
    report.epochs.push_back(stats);
    if (val_m.auc_value > report.best_val_auc) {
      report.best_val_auc = val_m.auc_value;
      report.best_epoch = epoch;
      best = head;
    }
  }

  if (x_test && x_test->rows() > 0) {
    const SetMetrics test_m = score_set(best, *x_test, y_test);
    report.test = TestMetrics{test_m.loss, test_m.acc, test_m.auc_value};
  }
  return report;
}

namespace {

// Valid 2x2 stride-2 convolution (each input pixel feeds exactly one output
// cell), 4 filters, ReLU. Matches the quantum patch geometry.
struct ConvModel {
  Eigen::Matrix<double, kConvFilters, kConvK * kConvK> filters;
  Eigen::Vector4d conv_bias;
  DenseHead head;

  Eigen::Index param_count() const {
    return filters.size() + conv_bias.size() + head.param_count();
  }
};

struct ConvForward {
  Eigen::MatrixXd activations;  // rows x (4*H2*W2), post-ReLU
};

void conv_forward(const ConvModel& model, const Eigen::MatrixXd& pixels, int h, int w,
                  ConvForward* out) {
  const int h2 = h / kConvK;
  const int w2 = w / kConvK;
  const Eigen::Index rows = pixels.rows();
  out->activations.resize(rows, static_cast<Eigen::Index>(kConvFilters) * h2 * w2);
  for (Eigen::Index img = 0; img < rows; ++img) {
    for (int f = 0; f < kConvFilters; ++f) {
      for (int r = 0; r < h2; ++r) {
        for (int c = 0; c < w2; ++c) {
          double acc = model.conv_bias(f);
          for (int i = 0; i < kConvK; ++i) {
            for (int j = 0; j < kConvK; ++j) {
              acc += model.filters(f, i * kConvK + j) *
                     pixels(img, (r * kConvK + i) * w + (c * kConvK + j));
            }
          }
          out->activations(img, (static_cast<Eigen::Index>(f) * h2 + r) * w2 + c) =
              acc > 0.0 ? acc : 0.0;
        }
      }
    }
  }
}

SetMetrics conv_score(const ConvModel& model, const Eigen::MatrixXd& pixels, int h, int w,
                      std::span<const uint8_t> y) {
  ConvForward fwd;
  conv_forward(model, pixels, h, w, &fwd);
  SetMetrics m;
  const Eigen::MatrixXd logits = head_logits(model.head, fwd.activations);
  m.loss = ce_loss_and_grad(logits, y, nullptr);
  m.acc = accuracy_of(logits, y);
  m.auc_value = auc(class1_scores(logits), y);
  return m;
}

}  // namespace

EvalReport train_conv(const Dataset& ds, const TrainConfig& cfg) {
  if (ds.height < kConvK || ds.width < kConvK) throw_data("image smaller than filter");
  const Eigen::MatrixXd pixels = pixel_matrix(ds);
  const SplitMatrices sm = split_design_matrix(pixels, ds);
  check_split(sm.y_val, "validation");
  check_split(sm.y_train, "train");
  const int h = ds.height;
  const int w = ds.width;
  const int h2 = h / kConvK;
  const int w2 = w / kConvK;
  const Eigen::Index head_dim = static_cast<Eigen::Index>(kConvFilters) * h2 * w2;

  Rng init_rng = make_rng(derive_seed(cfg.seed, 0x1217));
  Rng shuffle_rng = make_rng(derive_seed(cfg.seed, 0x5417));
  ConvModel model;
  const double conv_bound = 1.0 / std::sqrt(static_cast<double>(kConvK * kConvK));
  for (int f = 0; f < kConvFilters; ++f) {
    for (int i = 0; i < kConvK * kConvK; ++i) {
      model.filters(f, i) = uniform_real(init_rng, -conv_bound, conv_bound);
    }
  }
  for (int f = 0; f < kConvFilters; ++f) {
    model.conv_bias(f) = uniform_real(init_rng, -conv_bound, conv_bound);
  }
  model.head = DenseHead::init(head_dim, init_rng);

  AdamOptimizer opt(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, model.param_count());

  EvalReport report;
  ConvModel best = model;
  report.best_val_auc = conv_score(model, sm.x_val, h, w, sm.y_val).auc_value;
  report.best_epoch = 0;

  std::vector<int> order(sm.x_train.rows());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (size_t start = 0; start < order.size(); start += cfg.batch) {
      const size_t count = std::min<size_t>(cfg.batch, order.size() - start);
      Eigen::MatrixXd xb(count, sm.x_train.cols());
      std::vector<uint8_t> yb(count);
      for (size_t i = 0; i < count; ++i) {
        xb.row(i) = sm.x_train.row(order[start + i]);
        yb[i] = sm.y_train[order[start + i]];
      }

      ConvForward fwd;
      conv_forward(model, xb, h, w, &fwd);
      Eigen::MatrixXd dlogits;
      const double loss =
          ce_loss_and_grad(head_logits(model.head, fwd.activations), yb, &dlogits);
      if (!std::isfinite(loss)) {
        throw_runtime("NaN loss at epoch " + std::to_string(epoch));
      }

      const Eigen::MatrixXd dw = fwd.activations.transpose() * dlogits;
      const Eigen::Vector2d db = dlogits.colwise().sum();
      // Backprop into the activations, gate by ReLU, then accumulate filter
      // gradients patch by patch.
      const Eigen::MatrixXd dact = dlogits * model.head.w.transpose();
      Eigen::Matrix<double, kConvFilters, kConvK * kConvK> dfilters;
      dfilters.setZero();
      Eigen::Vector4d dconv_bias = Eigen::Vector4d::Zero();
      for (size_t img = 0; img < count; ++img) {
        for (int f = 0; f < kConvFilters; ++f) {
          for (int r = 0; r < h2; ++r) {
            for (int c = 0; c < w2; ++c) {
              const Eigen::Index pos = (static_cast<Eigen::Index>(f) * h2 + r) * w2 + c;
              if (fwd.activations(img, pos) <= 0.0) continue;
              const double g = dact(img, pos);
              dconv_bias(f) += g;
              for (int i = 0; i < kConvK; ++i) {
                for (int j = 0; j < kConvK; ++j) {
                  dfilters(f, i * kConvK + j) +=
                      g * xb(img, (r * kConvK + i) * w + (c * kConvK + j));
                }
              }
            }
          }
        }
      }

      Eigen::VectorXd flat_params(model.param_count());
      Eigen::VectorXd flat_grad(model.param_count());
      Eigen::Index off = 0;
      auto pack = [&](const double* p, const double* g, Eigen::Index n) {
        flat_params.segment(off, n) = Eigen::Map<const Eigen::VectorXd>(p, n);
        flat_grad.segment(off, n) = Eigen::Map<const Eigen::VectorXd>(g, n);
        off += n;
      };
      pack(model.filters.data(), dfilters.data(), model.filters.size());
      pack(model.conv_bias.data(), dconv_bias.data(), 4);
      pack(model.head.w.data(), dw.data(), model.head.w.size());
      pack(model.head.b.data(), db.data(), 2);
      opt.step(flat_params, flat_grad);
      off = 0;
      auto unpack = [&](double* p, Eigen::Index n) {
        Eigen::Map<Eigen::VectorXd>(p, n) = flat_params.segment(off, n);
        off += n;
      };
      unpack(model.filters.data(), model.filters.size());
      unpack(model.conv_bias.data(), 4);
      unpack(model.head.w.data(), model.head.w.size());
      unpack(model.head.b.data(), 2);
    }

    EpochStats stats;
    stats.epoch = epoch;
    const SetMetrics train_m = conv_score(model, sm.x_train, h, w, sm.y_train);
    const SetMetrics val_m = conv_score(model, sm.x_val, h, w, sm.y_val);
    stats.train_loss = train_m.loss;
    stats.train_acc = train_m.acc;
    stats.train_auc = train_m.auc_value;
    stats.val_loss = val_m.loss;
    stats.val_acc = val_m.acc;
    stats.val_auc = val_m.auc_value;
    report.epochs.push_back(stats);
    if (val_m.auc_value > report.best_val_auc) {
      report.best_val_auc = val_m.auc_value;
      report.best_epoch = epoch;
      best = model;
    }
  }

  if (sm.x_test.rows() > 0) {
    const SetMetrics test_m = conv_score(best, sm.x_test, h, w, sm.y_test);
    report.test = TestMetrics{test_m.loss, test_m.acc, test_m.auc_value};
  }
  return report;
}

SplitMatrices split_design_matrix(const Eigen::MatrixXd& rows, const Dataset& ds) {
  if (rows.rows() != static_cast<Eigen::Index>(ds.size())) {
    throw_data("design matrix row count does not match dataset");
  }
  SplitMatrices out;
  auto fill = [&](Split split, Eigen::MatrixXd& x, std::vector<uint8_t>& y) {
    const std::vector<int> idx = ds.indices_of(split);
    x.resize(static_cast<Eigen::Index>(idx.size()), rows.cols());
    y.resize(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) = rows.row(idx[i]);
      y[i] = ds.labels[idx[i]];
    }
  };
  fill(Split::Train, out.x_train, out.y_train);
  fill(Split::Val, out.x_val, out.y_val);
  fill(Split::Test, out.x_test, out.y_test);
  return out;
}

Eigen::MatrixXd pixel_matrix(const Dataset& ds) {
  const Eigen::Index dim = static_cast<Eigen::Index>(ds.height) * ds.width;
  Eigen::MatrixXd out(ds.size(), dim);
  for (size_t i = 0; i < ds.size(); ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      out(static_cast<Eigen::Index>(i), j) = ds.images[i].pixels[j];
    }
  }
  return out;
}

SweepResult sweep_scale(const EncodingCircuit& circuit, const Dataset& ds, int k,
                        std::span<const double> grid, const TrainConfig& cfg,
                        FeatureCache* cache, int jobs) {
  if (grid.empty()) throw_config("scale grid must be non-empty");
  SweepResult result;
  double best_auc = -1.0;
  for (double f : grid) {
    EncodingCircuit scaled = circuit;
    scaled.scale = f;
    std::shared_ptr<const Eigen::MatrixXd> features;
    if (cache) {
      features = cache->get(ds, scaled, k, jobs);
    } else {
      features = std::make_shared<const Eigen::MatrixXd>(
          extract_dataset(ds, scaled, k, jobs));
    }
    const SplitMatrices sm = split_design_matrix(*features, ds);
    EvalReport report = train_dense(sm.x_train, sm.y_train, sm.x_val, sm.y_val, cfg);
    if (report.best_val_auc > best_auc ||
        (report.best_val_auc == best_auc && f < result.best_scale)) {
      best_auc = report.best_val_auc;
      result.best_scale = f;
    }
    result.table.push_back({f, std::move(report)});
  }
  return result;
}

std::vector<double> default_scale_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 15; ++i) grid.push_back(0.5 + 0.1 * i);
  return grid;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["best_val_auc"] = report.best_val_auc;
  j["best_epoch"] = report.best_epoch;
  nlohmann::ordered_json epochs = nlohmann::ordered_json::array();
  for (const EpochStats& e : report.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"train_acc", e.train_acc},
                      {"train_auc", e.train_auc},
                      {"val_loss", e.val_loss},
                      {"val_acc", e.val_acc},
                      {"val_auc", e.val_auc}});
  }
  j["epochs"] = std::move(epochs);
  if (report.test) {
    j["test"] = {{"loss", report.test->loss},
                 {"accuracy", report.test->accuracy},
                 {"auc", report.test->auc}};
  }
  return j.dump(2);
}

std::string report_to_csv(const EvalReport& report) {
  std::string out = "epoch,train_loss,train_acc,train_auc,val_loss,val_acc,val_auc\n";
  for (const EpochStats& e : report.epochs) {
    out += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," +
           format_double(e.train_acc) + "," + format_double(e.train_auc) + "," +
           format_double(e.val_loss) + "," + format_double(e.val_acc) + "," +
           format_double(e.val_auc) + "\n";
  }
  return out;
}

}  // namespace qenc
