#include "rcov/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rcov/errors.hpp"
#include "rcov/eval/metrics.hpp"
#include "rcov/linalg/random.hpp"
#include "rcov/parallel.hpp"

namespace rcov::nn {

void adam_step(VectorXd& w, const VectorXd& grad, AdamState& s, const AdamConfig& cfg) {
  if (s.m.size() == 0) {
    s.m = VectorXd::Zero(w.size());
    s.v = VectorXd::Zero(w.size());
  }
  ++s.step;
  const VectorXd g = grad + cfg.weight_decay * w;
  s.m = cfg.beta1 * s.m + (1.0 - cfg.beta1) * g;
  s.v = cfg.beta2 * s.v + (1.0 - cfg.beta2) * g.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg.beta1, double(s.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, double(s.step));
  w.array() -= cfg.lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + cfg.eps);
}

void TrainConfig::validate() const {
  if (!(adam.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(adam.beta1 > 0.0 && adam.beta1 < 1.0 && adam.beta2 > 0.0 && adam.beta2 < 1.0))
    throw ConfigError("Adam betas must lie in (0, 1)");
  if (!(adam.weight_decay >= 0.0) || !(adam.eps > 0.0)) throw ConfigError("weight decay / eps");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(l1_lambda >= 0.0)) throw ConfigError("l1 lambda must be non-negative");
  if (!(loss.delta > 0.0)) throw ConfigError("huber delta must be positive");
  if (max_epochs < 1 || patience < 1) throw ConfigError("epoch budget and patience must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

double batch_objective(const ModelWeights& weights, const WindowSet& windows,
                       std::span<const Index> samples, const LossConfig& loss, double l1_lambda,
                       VectorXd* grad, int threads) {
  const Index n = static_cast<Index>(samples.size());
  if (n == 0) throw EmptySplit("no samples in batch");
  std::vector<double> losses(samples.size());
  std::vector<VectorXd> grads(grad ? samples.size() : 0);
  parallel_for(n, threads, [&](Index j) {
    const Index i = samples[size_t(j)];
    if (!grad) {
      losses[size_t(j)] = sample_loss(forward(weights, windows.window(i)), windows.target(i), loss);
      return;
    }
    ForwardCache cache;
    const MatrixXd out = forward(weights, windows.window(i), &cache);
    MatrixXd d_out;
    losses[size_t(j)] = sample_loss(out, windows.target(i), loss, &d_out);
    grads[size_t(j)] = VectorXd::Zero(weights.values.size());
    backward(weights, cache, d_out, grads[size_t(j)]);
  });

  const VectorXd mask = weights.layout.kernel_mask();
  const double data = std::accumulate(losses.begin(), losses.end(), 0.0) / double(n);
  const double l1 = l1_lambda * weights.values.cwiseAbs().cwiseProduct(mask).sum();
  if (grad) {
    grad->setZero(weights.values.size());
    for (const auto& g : grads) *grad += g;
    *grad /= double(n);
    *grad += l1_lambda * weights.values.unaryExpr([](double v) {
      return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    }).cwiseProduct(mask);
  }
  return data + l1;
}

std::pair<double, double> score_samples(const ModelWeights& weights, const TrainingData& data,
                                        std::span<const Index> samples, int threads) {
  if (samples.empty()) throw EmptySplit("no samples to score");
  std::vector<double> rmse(samples.size()), mae(samples.size());
  parallel_for(static_cast<Index>(samples.size()), threads, [&](Index j) {
    const Index i = samples[size_t(j)];
    const MatrixXd pred = inverse_transform(forward(weights, data.windows.window(i)), data.transform).matrix();
    const MatrixXd& truth = data.series[data.windows.target_index(i)].matrix();
    rmse[size_t(j)] = matrix_rmse(pred, truth);
    mae[size_t(j)] = matrix_mae(pred, truth);
  });
  const double n = double(samples.size());
  return {std::accumulate(rmse.begin(), rmse.end(), 0.0) / n,
          std::accumulate(mae.begin(), mae.end(), 0.0) / n};
}

TrainResult train(const ModelSpec& spec, const TrainingData& data, const TrainConfig& cfg,
                  std::optional<ModelWeights> init,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  spec.validate();
  if (data.windows.dim() != spec.dim || data.windows.lag() != spec.lag)
    throw ShapeMismatch("windows do not match the model's dimension or lag");
  std::vector<Index> train_idx = data.windows.samples_targeting(data.train);
  const std::vector<Index> val_idx = data.windows.samples_targeting(data.val);
  if (train_idx.empty()) throw EmptySplit("training range holds no lag window");
  if (val_idx.empty()) throw EmptySplit("validation range holds no lag window");

  ModelWeights w = init ? std::move(*init) : init_weights(spec, cfg.seed);
  if (w.values.size() != ModelLayout(spec).size()) throw ShapeMismatch("initial weights do not fit the spec");
  AdamState state;
  Rng shuffle_rng(cfg.seed ^ 0x5DEECE66Dull);

  TrainResult result;
  result.best = w;
  result.best_val_rmse = std::numeric_limits<double>::infinity();
  int stale = 0;
  VectorXd grad;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), shuffle_rng.engine());
    double loss_sum = 0.0;
    for (size_t b = 0; b < train_idx.size(); b += size_t(cfg.batch_size)) {
      const auto batch = std::span<const Index>(train_idx).subspan(
          b, std::min(size_t(cfg.batch_size), train_idx.size() - b));
      const double obj = batch_objective(w, data.windows, batch, cfg.loss, cfg.l1_lambda, &grad, cfg.threads);
      if (!std::isfinite(obj) || !grad.allFinite()) throw NoConvergence("training loss became non-finite");
      const double l1 = cfg.l1_lambda * w.values.cwiseAbs().cwiseProduct(w.layout.kernel_mask()).sum();
      loss_sum += (obj - l1) * double(batch.size());
      adam_step(w.values, grad, state, cfg.adam);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / double(train_idx.size());
    std::tie(rec.val_rmse, rec.val_mae) = score_samples(w, data, val_idx, cfg.threads);
    if (!std::isfinite(rec.val_rmse)) throw NoConvergence("validation forecasts are non-finite");
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (rec.val_rmse < result.best_val_rmse) {
      result.best_val_rmse = rec.val_rmse;
      result.best_epoch = epoch;
      result.best = w;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace rcov::nn
