#include "rcov/cli/experiment.hpp"

#include <cmath>
#include <sstream>

#include "rcov/baselines.hpp"
#include "rcov/cli/dataset.hpp"
#include "rcov/errors.hpp"

namespace rcov::cli {

namespace {

std::string bracket(std::initializer_list<Index> xs) {
  std::ostringstream os;
  os << '(';
  bool first = true;
  for (Index x : xs) {
    if (!first) os << ", ";
    os << x;
    first = false;
  }
  os << ')';
  return os.str();
}

double validation_rmse(const Forecaster& f, const RCovSeries& series, const SeriesSplit& split, int threads) {
  return evaluate_series(f, series, split.val, "val", threads).mean_rmse;
}

FittedModel fit_smoother(const RCovSeries& series, const SeriesSplit& split, const std::vector<Index>& lags,
                         int threads, bool exponential) {
  FittedModel best;
  best.name = exponential ? "EMA" : "MA";
  for (Index n : lags) {
    if (n < 1) throw ConfigError("lags must be >= 1");
    Forecaster f = [n, exponential](std::span<const SpdMatrixd> h) {
      const History hist(h);
      const Index use = std::min<Index>(n, static_cast<Index>(h.size()));
      return (exponential ? ema_forecast(hist, use) : ma_forecast(hist, use)).matrix();
    };
    const double v = validation_rmse(f, series, split, threads);
    if (!(v >= best.val_rmse)) {
      best.val_rmse = v;
      best.forecaster = std::move(f);
      best.parameters = bracket({n});
    }
  }
  return best;
}

}  // namespace

Innovation parse_innovation(const std::string& name) {
  if (name == "wishart") return Innovation::Wishart;
  if (name == "matrix-f") return Innovation::MatrixF;
  throw ConfigError("unknown innovation '" + name + "' (wishart | matrix-f)");
}

SimulationSetup simulation_setup(const Config& cfg, std::optional<Innovation> innovation) {
  SimulationSetup s;
  s.params.nu = cfg.real("simulation.nu", s.params.nu);
  s.params.nu1 = cfg.real("simulation.nu1", s.params.nu1);
  s.params.nu2 = cfg.real("simulation.nu2", s.params.nu2);
  s.options.length = cfg.integer("simulation.length", 5000);
  s.options.burn_in = cfg.integer("simulation.burn_in", 100);
  s.options.innovation = innovation ? *innovation : parse_innovation(cfg.str("simulation.innovation", "wishart"));
  s.dim = cfg.integer("simulation.dim", 15);
  s.embedding.seed = cfg.u64("simulation.embedding_seed", s.embedding.seed);
  s.embedding.static_scale = cfg.real("simulation.static_scale", s.embedding.static_scale);
  s.seed = cfg.u64("simulation.seed", 1);
  if (s.options.length < 2) throw ConfigError("simulation.length must be >= 2");
  if (s.options.burn_in < 0) throw ConfigError("simulation.burn_in must be >= 0");
  if (s.dim <= s.params.r) throw ConfigError("simulation.dim must exceed the factor dimension 3");
  s.params.validate(s.options.innovation);
  return s;
}

SimulatedData simulate(const SimulationSetup& setup) {
  Rng rng(setup.seed);
  SimulatedData out;
  out.params = setup.params;
  out.path = simulate_caw(setup.params, setup.options, rng);
  out.embedding = make_embedding(setup.dim, setup.params.r, setup.embedding);
  out.series = embed_factors(out.path.factors, out.embedding);
  return out;
}

RCovSeries load_series(const Config& cfg, SimulatedData* sim) {
  const bool from_file = cfg.has("data.path"), simulated = cfg.has_section("simulation");
  if (from_file == simulated)
    throw ConfigError("exactly one data source is required: [data] path or a [simulation] section");
  if (from_file) return read_dataset(cfg.str("data.path", ""));
  SimulatedData data = simulate(simulation_setup(cfg));
  RCovSeries series = data.series;
  if (sim) *sim = std::move(data);
  return series;
}

SplitScheme split_scheme(const Config& cfg) {
  const std::string kind = cfg.str("split.scheme", "fractional");
  if (kind == "fractional") {
    const double tr = cfg.real("split.train", 0.7), va = cfg.real("split.val", 0.1), te = cfg.real("split.test", 0.2);
    if (!(tr > 0 && va > 0 && te > 0) || std::abs(tr + va + te - 1.0) > 1e-9)
      throw ConfigError("split fractions must be positive and sum to 1");
    return SplitScheme::fractional(tr, va, te);
  }
  if (kind == "trailing") {
    const Index v = cfg.integer("split.val_days", 252), t = cfg.integer("split.test_days", 252);
    if (v < 1 || t < 1) throw ConfigError("split day counts must be >= 1");
    return SplitScheme::trailing(v, t);
  }
  throw ConfigError("unknown split scheme '" + kind + "' (fractional | trailing)");
}

TransformSpec transform_spec(const Config& cfg) {
  return TransformSpec{parse_transform(cfg.str("transform.kind", "sqrt-then-cholesky"))};
}

nn::ModelSpec model_spec(const Config& cfg, Index dim) {
  const Index lag = cfg.integer("model.lag", 20);
  nn::ModelSpec spec = nn::ModelSpec::preset(cfg.str("model.preset", "simulation"), dim, lag);
  if (cfg.has("model.layers")) spec.layers = nn::ModelSpec::parse_layers(cfg.str("model.layers", ""));
  spec.lrelu_slope = cfg.real("model.lrelu_slope", spec.lrelu_slope);
  if (cfg.flag("model.peephole", false)) spec.layers.front().peephole = true;
  spec.validate();
  return spec;
}

nn::TrainConfig train_config(const Config& cfg, int threads) {
  nn::TrainConfig t;
  t.adam.lr = cfg.real("train.lr", t.adam.lr);
  t.adam.beta1 = cfg.real("train.beta1", t.adam.beta1);
  t.adam.beta2 = cfg.real("train.beta2", t.adam.beta2);
  t.adam.weight_decay = cfg.real("train.weight_decay", t.adam.weight_decay);
  t.batch_size = cfg.integer("train.batch_size", t.batch_size);
  t.l1_lambda = cfg.real("train.l1_lambda", t.l1_lambda);
  t.loss.kind = nn::parse_loss_kind(cfg.str("train.loss", "huber"));
  t.loss.delta = cfg.real("train.huber_delta", t.loss.delta);
  t.loss.mode = nn::parse_huber_mode(cfg.str("train.huber_mode", "matrix-norm"));
  t.max_epochs = static_cast<int>(cfg.integer("train.max_epochs", t.max_epochs));
  t.patience = static_cast<int>(cfg.integer("train.patience", t.patience));
  t.seed = cfg.u64("train.seed", 1);
  t.threads = threads;
  t.validate();
  return t;
}

FittedModel fit_ma(const RCovSeries& series, const SeriesSplit& split, const std::vector<Index>& lags,
                   int threads) {
  return fit_smoother(series, split, lags, threads, false);
}

FittedModel fit_ema(const RCovSeries& series, const SeriesSplit& split, const std::vector<Index>& lags,
                    int threads) {
  return fit_smoother(series, split, lags, threads, true);
}

FittedModel fit_mfa_var(const RCovSeries& series, const SeriesSplit& split,
                        const std::vector<Index>& factor_dims, const std::vector<Index>& orders,
                        int threads) {
  const RCovSeries train = series.slice(split.train.begin, split.train.end);
  FittedModel best;
  best.name = "MFA-VAR";
  for (Index r : factor_dims) {
    const MfaFit mfa = mfa_fit(train, r);
    std::optional<VarParams> chosen;
    for (Index q : orders) {
      try {
        VarParams v = var_fit(mfa.factors, q);
        if (!chosen || v.bic() < chosen->bic()) chosen = std::move(v);
      } catch (const SeriesTooShort&) {
      } catch (const SingularDesign&) {
      }
    }
    if (!chosen) continue;
    auto emb = std::make_shared<const MfaEmbedding>(mfa.embedding);
    auto var = std::make_shared<const VarParams>(*chosen);
    Forecaster f = [emb, var](std::span<const SpdMatrixd> h) {
      const size_t q = static_cast<size_t>(var->q);
      const auto tail = h.subspan(h.size() - std::min(q, h.size()));
      const auto factors = project_factors(*emb, tail);
      return compose_forecast(*emb, var_forecast(*var, factors).matrix()).matrix();
    };
    const double v = validation_rmse(f, series, split, threads);
    if (!(v >= best.val_rmse)) {
      best.val_rmse = v;
      best.forecaster = std::move(f);
      best.parameters = bracket({chosen->q, r});
    }
  }
  if (!best.forecaster) throw SeriesTooShort("no VAR order could be fitted on the training split");
  return best;
}

FittedModel fit_mfa_dcaw(const RCovSeries& series, const SeriesSplit& split,
                         const std::vector<Index>& factor_dims,
                         const std::vector<std::pair<Index, Index>>& orders, int threads) {
  const RCovSeries train = series.slice(split.train.begin, split.train.end);
  FittedModel best;
  best.name = "MFA-DCAW";
  for (Index r : factor_dims) {
    const MfaFit mfa = mfa_fit(train, r);
    std::optional<DcawFit> chosen;
    for (const auto& [p, q] : orders) {
      try {
        DcawFit fit = dcaw_fit(mfa.factors, p, q);
        if (!chosen || fit.bic() < chosen->bic()) chosen = std::move(fit);
      } catch (const NonFiniteLikelihood&) {
      }
    }
    if (!chosen) continue;
    auto emb = std::make_shared<const MfaEmbedding>(mfa.embedding);
    auto fit = std::make_shared<const DcawFit>(*chosen);
    Forecaster f = [emb, fit](std::span<const SpdMatrixd> h) {
      const auto factors = project_factors(*emb, h);
      return compose_forecast(*emb, dcaw_forecast(*fit, factors).matrix()).matrix();
    };
    const double v = validation_rmse(f, series, split, threads);
    if (!(v >= best.val_rmse)) {
      best.val_rmse = v;
      best.forecaster = std::move(f);
      best.parameters = bracket({chosen->params.p(), chosen->params.q(), r});
    }
  }
  if (!best.forecaster) throw NonFiniteLikelihood("no DCAW order produced a finite likelihood");
  return best;
}

Forecaster convlstm_forecaster(std::shared_ptr<const nn::ModelWeights> weights, TransformSpec transform) {
  return [weights, transform](std::span<const SpdMatrixd> h) {
    const Index lag = weights->spec.lag;
    if (static_cast<Index>(h.size()) < lag) throw SeriesTooShort("history shorter than the model lag");
    std::vector<MatrixXd> window;
    window.reserve(static_cast<size_t>(lag));
    for (size_t t = h.size() - static_cast<size_t>(lag); t < h.size(); ++t)
      window.push_back(forward_transform(h[t], transform));
    return inverse_transform(nn::forward(*weights, window), transform).matrix();
  };
}

FittedModel fit_convlstm(const RCovSeries& series, const SeriesSplit& split, TransformSpec transform,
                         const nn::ModelSpec& spec, const nn::TrainConfig& train_cfg) {
  const WindowSet windows = make_windows(series, transform, spec.lag);
  const nn::TrainingData data{windows, series, transform, split.train, split.val};
  auto result = std::make_shared<nn::TrainResult>(nn::train(spec, data, train_cfg));
  FittedModel m;
  m.name = "ConvLSTM";
  m.weight_count = nn::count_params(spec).weights_only;
  m.parameters = std::to_string(m.weight_count);
  m.val_rmse = result->best_val_rmse;
  m.forecaster = convlstm_forecaster(std::make_shared<const nn::ModelWeights>(result->best), transform);
  m.training = std::move(result);
  return m;
}

FittedModel oracle_model(const SimulatedData& sim) {
  auto scales = std::make_shared<const std::vector<SpdMatrixd>>(sim.path.scales);
  auto emb = std::make_shared<const MfaEmbedding>(sim.embedding);
  FittedModel m;
  m.name = "Oracle";
  m.parameters = "-";
  // S_f(t) is a deterministic function of the factor history, so indexing the
  // stored path by history length is the true conditional mean.
  m.forecaster = [scales, emb](std::span<const SpdMatrixd> h) {
    if (h.size() >= scales->size()) throw IndexOutOfRange("oracle has no scale beyond the simulated path");
    return compose(*emb, (*scales)[h.size()].matrix()).matrix();
  };
  return m;
}

std::vector<std::pair<Index, Index>> parse_orders(const std::vector<std::string>& items) {
  std::vector<std::pair<Index, Index>> out;
  for (const auto& s : items) {
    const auto colon = s.find(':');
    try {
      if (colon == std::string::npos) throw std::invalid_argument(s);
      const Index p = std::stol(s.substr(0, colon)), q = std::stol(s.substr(colon + 1));
      if (p < 1 || q < 1) throw std::invalid_argument(s);
      out.emplace_back(p, q);
    } catch (const std::exception&) {
      throw ConfigError("DCAW order '" + s + "' must look like p:q with p, q >= 1");
    }
  }
  if (out.empty()) throw ConfigError("no DCAW orders given");
  return out;
}

}  // namespace rcov::cli
