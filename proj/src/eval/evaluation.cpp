#include "rcov/eval/evaluation.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "rcov/linalg/decompositions.hpp"
#include "rcov/nn/network.hpp"
#include "rcov/parallel.hpp"

namespace rcov {

std::string EvalReport::per_day_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "day,rmse,mae,psd\n";
  for (const auto& d : per_day) os << d.label << ',' << d.rmse << ',' << d.mae << ',' << (d.psd ? 1 : 0) << '\n';
  return os.str();
}

EvalReport evaluate_series(const Forecaster& forecaster, const RCovSeries& series, Range test,
                           const std::string& model, int threads) {
  if (test.begin < 1 || test.size() < 1 || test.end > series.size())
    throw SeriesTooShort("test range [" + std::to_string(test.begin) + ", " +
                         std::to_string(test.end) + ") needs history inside a series of " +
                         std::to_string(series.size()) + " days");
  const auto start = std::chrono::steady_clock::now();
  EvalReport rep;
  rep.model = model;
  rep.per_day.resize(static_cast<size_t>(test.size()));
  const std::span<const SpdMatrixd> all(series.matrices());
  parallel_for(test.size(), threads, [&](Index k) {
    const Index t = test.begin + k;
    const MatrixXd pred = forecaster(all.first(static_cast<size_t>(t)));
    const MatrixXd& truth = series[t].matrix();
    DayScore& s = rep.per_day[static_cast<size_t>(k)];
    s.label = series.labels()[static_cast<size_t>(t)];
    s.rmse = matrix_rmse(pred, truth);
    s.mae = matrix_mae(pred, truth);
    s.psd = pred.allFinite() && is_spd(SymMatrixd(pred));
  });
  for (const auto& s : rep.per_day) {
    rep.mean_rmse += s.rmse;
    rep.mean_mae += s.mae;
  }
  rep.mean_rmse /= double(rep.per_day.size());
  rep.mean_mae /= double(rep.per_day.size());
  rep.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

std::vector<double> correlation_series(const RCovSeries& series, Index i, Index j) {
  if (i == j || i < 0 || j < 0 || i >= series.dim() || j >= series.dim())
    throw IndexOutOfRange("asset pair (" + std::to_string(i) + ", " + std::to_string(j) + ")");
  std::vector<double> out;
  out.reserve(static_cast<size_t>(series.size()));
  for (const auto& m : series.matrices()) out.push_back(m(i, j) / std::sqrt(m(i, i) * m(j, j)));
  return out;
}

std::vector<std::vector<double>> feature_map_distances(const nn::ModelWeights& weights,
                                                       std::span<const MatrixXd> window,
                                                       const MatrixXd& target) {
  if (target.rows() != weights.spec.dim || target.cols() != weights.spec.dim)
    throw ShapeMismatch("target does not match the model dimension");
  std::vector<std::vector<double>> out;
  for (const auto& fm : nn::layer_outputs(weights, window)) {
    std::vector<double> layer;
    for (Index c = 0; c < fm.channels(); ++c) layer.push_back(matrix_mae(fm.channel(c), target));
    out.push_back(std::move(layer));
  }
  return out;
}

Histogram histogram(std::span<const double> values, Index bins, double lo, double hi) {
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  if (!(hi > lo)) throw ConfigError("histogram range must be increasing");
  Histogram h{lo, hi, std::vector<Index>(static_cast<size_t>(bins), 0)};
  const double width = (hi - lo) / double(bins);
  for (double v : values) {
    const double pos = std::isnan(v) ? 0.0 : std::floor((v - lo) / width);
    ++h.counts[static_cast<size_t>(std::clamp(pos, 0.0, double(bins - 1)))];
  }
  return h;
}

}  // namespace rcov
