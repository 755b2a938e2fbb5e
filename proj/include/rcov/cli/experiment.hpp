#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rcov/cli/config.hpp"
#include "rcov/eval/evaluation.hpp"
#include "rcov/nn/train.hpp"
#include "rcov/simulator.hpp"
#include "rcov/transforms.hpp"

namespace rcov::cli {

struct SimulationSetup {
  CawParams params = CawParams::reference();
  SimulationOptions options;
  Index dim = 15;
  RandomOrthonormalSource embedding;
  std::uint64_t seed = 1;
};

struct SimulatedData {
  RCovSeries series;
  CawPath path;
  MfaEmbedding embedding;
  CawParams params;
};

/// Reads the [simulation] section; `innovation` overrides simulation.innovation.
SimulationSetup simulation_setup(const Config& cfg, std::optional<Innovation> innovation = {});
SimulatedData simulate(const SimulationSetup& setup);

Innovation parse_innovation(const std::string& name);

/// Exactly one of data.path and a [simulation] section must be present.
/// When the series is simulated and `sim` is non-null it receives the truth.
RCovSeries load_series(const Config& cfg, SimulatedData* sim = nullptr);

SplitScheme split_scheme(const Config& cfg);
TransformSpec transform_spec(const Config& cfg);
nn::ModelSpec model_spec(const Config& cfg, Index dim);
nn::TrainConfig train_config(const Config& cfg, int threads);

/// A fitted forecaster with its selected hyperparameters.
struct FittedModel {
  std::string name;
  std::string parameters;  // "(7)", "(3, 1)", "(1, 1, 1)" or a weight count
  Forecaster forecaster;
  double val_rmse = std::numeric_limits<double>::quiet_NaN();
  Index weight_count = 0;
  std::shared_ptr<const nn::TrainResult> training;  // ConvLSTM only
};

/// Lag n in `lags` with the lowest validation RMSE (ties go to the smaller n).
FittedModel fit_ma(const RCovSeries& series, const SeriesSplit& split, const std::vector<Index>& lags,
                   int threads = 1);
FittedModel fit_ema(const RCovSeries& series, const SeriesSplit& split, const std::vector<Index>& lags,
                    int threads = 1);
/// For each r, VAR order by BIC on the training factors; r by validation RMSE.
FittedModel fit_mfa_var(const RCovSeries& series, const SeriesSplit& split,
                        const std::vector<Index>& factor_dims, const std::vector<Index>& orders,
                        int threads = 1);
/// For each r, DCAW (p, q) by BIC on the training factors; r by validation RMSE.
FittedModel fit_mfa_dcaw(const RCovSeries& series, const SeriesSplit& split,
                         const std::vector<Index>& factor_dims,
                         const std::vector<std::pair<Index, Index>>& orders, int threads = 1);
FittedModel fit_convlstm(const RCovSeries& series, const SeriesSplit& split, TransformSpec transform,
                         const nn::ModelSpec& spec, const nn::TrainConfig& train_cfg);

Forecaster convlstm_forecaster(std::shared_ptr<const nn::ModelWeights> weights, TransformSpec transform);

/// Conditional-mean forecaster that knows the simulated scale path and
/// embedding: the forecast for day t is A S_f(t) A^T + Sigma_0.
FittedModel oracle_model(const SimulatedData& sim);

std::vector<std::pair<Index, Index>> parse_orders(const std::vector<std::string>& items);

}  // namespace rcov::cli
