#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rcov/nn/loss.hpp"
#include "rcov/nn/network.hpp"
#include "rcov/transforms.hpp"

namespace rcov::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999;
  double weight_decay = 1e-5;  // added to the gradient as weight_decay * w
  double eps = 1e-8;
};

struct AdamState {
  VectorXd m, v;
  std::int64_t step = 0;
};

/// One bias-corrected Adam update of `w` in place; zero-sized state is
/// initialized on first use.
void adam_step(VectorXd& w, const VectorXd& grad, AdamState& state, const AdamConfig& cfg);

struct TrainConfig {
  AdamConfig adam;
  Index batch_size = 128;
  double l1_lambda = 0.005;
  LossConfig loss;
  int max_epochs = 200;
  int patience = 20;
  std::uint64_t seed = 0;
  int threads = 1;

  /// Throws ConfigError for non-positive sizes/rates or betas outside (0, 1).
  void validate() const;
};

/// Mean per-sample loss over `samples` plus l1_lambda * sum |kernel weights|.
/// When `grad` is given it receives the full gradient (L1 subgradient 0 at 0).
/// Per-sample gradients are reduced in sample order, so the result does not
/// depend on `threads`.
double batch_objective(const ModelWeights& weights, const WindowSet& windows,
                       std::span<const Index> samples, const LossConfig& loss, double l1_lambda,
                       VectorXd* grad = nullptr, int threads = 1);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean per-sample loss over the epoch
  double val_rmse = 0.0;    // mean per-day RMSE in covariance space
  double val_mae = 0.0;
};

struct TrainResult {
  ModelWeights best;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_rmse = 0.0;
};

/// Windows over the transformed series and the original matrices they score against.
struct TrainingData {
  const WindowSet& windows;
  const RCovSeries& series;
  TransformSpec transform;
  Range train;  // target days
  Range val;
};

/// Mean per-day RMSE and MAE of the model's forecasts for `samples`, mapped
/// back through the inverse transform.
std::pair<double, double> score_samples(const ModelWeights& weights, const TrainingData& data,
                                        std::span<const Index> samples, int threads = 1);

/// Seeded-shuffle mini-batch Adam; keeps the weights with the lowest
/// validation RMSE and stops after `patience` epochs without improvement.
/// Throws EmptySplit when the train or validation range holds no sample and
/// NoConvergence when the loss becomes non-finite.
TrainResult train(const ModelSpec& spec, const TrainingData& data, const TrainConfig& cfg,
                  std::optional<ModelWeights> init = std::nullopt,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace rcov::nn
