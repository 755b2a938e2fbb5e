#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rcov/eval/metrics.hpp"
#include "rcov/nn/model.hpp"
#include "rcov/series.hpp"

namespace rcov {

/// One-step-ahead forecast of the next day from the true matrices so far
/// (chronological). Must not depend on anything but its argument.
using Forecaster = std::function<MatrixXd(std::span<const SpdMatrixd> history)>;

struct DayScore {
  std::int64_t label = 0;
  double rmse = 0.0;
  double mae = 0.0;
  bool psd = true;  // forecast passed the SPD check
};

struct EvalReport {
  std::string model;
  std::vector<DayScore> per_day;
  double mean_rmse = 0.0;
  double mean_mae = 0.0;
  double elapsed_seconds = 0.0;
  Index params = 0;

  /// "day,rmse,mae,psd" rows.
  std::string per_day_csv() const;
};

/// Rolling evaluation over the `test` days: the forecast for day t sees days
/// [0, t). Throws SeriesTooShort when the range starts at 0, is empty or
/// runs past the series.
EvalReport evaluate_series(const Forecaster& forecaster, const RCovSeries& series, Range test,
                           const std::string& model = "model", int threads = 1);

/// rho_t = Sigma_ij / sqrt(Sigma_ii Sigma_jj). Throws IndexOutOfRange unless
/// i != j and both are below d.
std::vector<double> correlation_series(const RCovSeries& series, Index i, Index j);

/// For every layer, the MAE (summed absolute cell difference) between each
/// output channel and the transformed target.
std::vector<std::vector<double>> feature_map_distances(const nn::ModelWeights& weights,
                                                       std::span<const MatrixXd> window,
                                                       const MatrixXd& target);

struct Histogram {
  double lo = 0.0, hi = 1.0;
  std::vector<Index> counts;
};

/// Equal-width bins over [lo, hi]; values outside the range land in the edge
/// bins so counts always sum to values.size(). Throws ConfigError for bins < 1
/// or hi <= lo.
Histogram histogram(std::span<const double> values, Index bins, double lo, double hi);

}  // namespace rcov
