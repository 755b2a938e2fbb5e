#include "rcov/cli/commands.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "rcov/baselines.hpp"
#include "rcov/cli/dataset.hpp"
#include "rcov/cli/experiment.hpp"
#include "rcov/errors.hpp"
#include "rcov/io/files.hpp"

#ifndef RCOV_VERSION
#define RCOV_VERSION "unknown"
#endif

namespace rcov::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

/// Loaded config plus run bookkeeping shared by every command.
class Run {
 public:
  Run(std::string command, const RunOptions& opts) : command_(std::move(command)), opts_(opts) {
    if (opts.config_path.empty()) throw ConfigError("--config is required");
    if (opts.threads < 1) throw ConfigError("--threads must be >= 1");
    cfg_ = Config::from_file(opts.config_path);
    if (opts.seed) {
      if (cfg_.has_section("simulation")) cfg_.set("simulation.seed", std::to_string(*opts.seed));
      cfg_.set("train.seed", std::to_string(*opts.seed));
    }
    fs::create_directories(opts.out_dir);
  }

  const Config& cfg() const { return cfg_; }
  int threads() const { return opts_.threads; }

  std::string path(const std::string& name) const { return (fs::path(opts_.out_dir) / name).string(); }

  void write(const std::string& name, const std::string& text) {
    io::atomic_write(path(name), text);
    outputs_.push_back(name);
  }
  void note_output(const std::string& name) { outputs_.push_back(name); }
  void set_extra(const std::string& key, json value) { extra_[key] = std::move(value); }

  void finish() {
    json m;
    m["command"] = command_;
    m["version"] = RCOV_VERSION;
    m["config_path"] = opts_.config_path;
    m["config"] = cfg_.values();
    m["config_digest"] = hex64(io::fnv1a(cfg_.canonical()));
    m["seed_override"] = opts_.seed ? json(*opts_.seed) : json(nullptr);
    m["threads"] = opts_.threads;
    m["started_utc"] = started_utc_;
    m["elapsed_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    m["outputs"] = outputs_;
    if (!extra_.empty()) m["details"] = extra_;
    io::atomic_write(path("manifest.json"), m.dump(2) + "\n");
  }

 private:
  std::string command_;
  RunOptions opts_;
  Config cfg_;
  std::vector<std::string> outputs_;
  json extra_ = json::object();
  std::string started_utc_ = utc_now();
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string summary_header() { return "model,parameters,mean_rmse,mean_mae,runtime_s\n"; }

std::string summary_row(const std::string& model, const std::string& params, const EvalReport& r,
                        double runtime) {
  return model + "," + params + "," + num(r.mean_rmse) + "," + num(r.mean_mae) + "," + num(runtime) + "\n";
}

std::string csv_quote(const std::string& s) {
  return s.find(',') == std::string::npos ? s : "\"" + s + "\"";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string history_csv(const nn::TrainResult& r) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,train_loss,val_rmse,val_mae\n";
  for (const auto& e : r.history) os << e.epoch << ',' << e.train_loss << ',' << e.val_rmse << ',' << e.val_mae << '\n';
  return os.str();
}

std::string innovation_tag(Innovation i) { return i == Innovation::Wishart ? "W" : "F"; }

/// Fits one named model on `series`. `sim` enables the oracle.
FittedModel fit_named(const std::string& name, const Config& cfg, const RCovSeries& series,
                      const SeriesSplit& split, const SimulatedData* sim, int threads) {
  const auto lags = cfg.int_list("baselines.ma_lags", "1-10");
  const auto dims = cfg.int_list("baselines.factor_dims", "1-3");
  if (name == "ma") return fit_ma(series, split, lags, threads);
  if (name == "ema") return fit_ema(series, split, lags, threads);
  if (name == "mfa-var") return fit_mfa_var(series, split, dims, cfg.int_list("baselines.var_orders", "1-3"), threads);
  if (name == "mfa-dcaw")
    return fit_mfa_dcaw(series, split, dims, parse_orders(cfg.list("baselines.dcaw_orders", "1:1,2:2")), threads);
  if (name == "convlstm")
    return fit_convlstm(series, split, transform_spec(cfg), model_spec(cfg, series.dim()), train_config(cfg, threads));
  if (name == "oracle") {
    if (!sim) throw ConfigError("the oracle model needs a [simulation] data source");
    return oracle_model(*sim);
  }
  throw ConfigError("unknown model '" + name + "' (ma | ema | mfa-var | mfa-dcaw | convlstm | oracle)");
}

}  // namespace

void cmd_simulate(const RunOptions& opts) {
  Run run("simulate", opts);
  if (!run.cfg().has_section("simulation")) throw ConfigError("simulate needs a [simulation] section");
  const SimulationSetup setup = simulation_setup(run.cfg());
  const SimulatedData sim = simulate(setup);
  std::ostringstream prov;
  prov << "simulated CAW: innovation=" << to_string(setup.options.innovation) << " nu=" << setup.params.nu
       << " nu1=" << setup.params.nu1 << " nu2=" << setup.params.nu2 << " L=" << setup.options.length
       << " burn_in=" << setup.options.burn_in << " d=" << setup.dim << " seed=" << setup.seed
       << " embedding_seed=" << setup.embedding.seed;
  write_dataset(run.path("dataset.json"), sim.series, prov.str());
  run.note_output("dataset.json");
  run.note_output("dataset.bin");
  write_dataset(run.path("scales.json"), RCovSeries(sim.path.scales), "conditional means S_f(t) of " + prov.str());
  run.note_output("scales.json");
  run.note_output("scales.bin");
  run.set_extra("T", sim.series.size());
  run.set_extra("d", sim.series.dim());
  run.finish();
  std::cout << "simulated T=" << sim.series.size() << " d=" << sim.series.dim() << " -> " << run.path("dataset.json") << '\n';
}

void cmd_train(const RunOptions& opts) {
  Run run("train", opts);
  const RCovSeries series = load_series(run.cfg());
  const SeriesSplit split = split_series(series, split_scheme(run.cfg()));
  const TransformSpec transform = transform_spec(run.cfg());
  const nn::ModelSpec spec = model_spec(run.cfg(), series.dim());
  const nn::TrainConfig tcfg = train_config(run.cfg(), run.threads());
  const nn::ParamCount count = nn::count_params(spec);
  std::cout << "weights_only=" << count.weights_only << " total=" << count.total << '\n';

  const WindowSet windows = make_windows(series, transform, spec.lag);
  const nn::TrainingData data{windows, series, transform, split.train, split.val};
  const nn::TrainResult result = nn::train(spec, data, tcfg, std::nullopt, [](const nn::EpochRecord& e) {
    std::cout << "epoch " << e.epoch << " train_loss=" << e.train_loss << " val_rmse=" << e.val_rmse
              << " val_mae=" << e.val_mae << std::endl;
  });
  nn::save_checkpoint(run.path("checkpoint.bin"), result.best);
  run.note_output("checkpoint.bin");
  run.write("history.csv", history_csv(result));
  json params;
  params["weights_only"] = count.weights_only;
  params["total"] = count.total;
  params["best_epoch"] = result.best_epoch;
  params["best_val_rmse"] = result.best_val_rmse;
  params["layers"] = spec.layers_string();
  params["spec_digest"] = hex64(nn::spec_digest(spec));
  run.write("params.json", params.dump(2) + "\n");
  run.set_extra("parameters", params);
  run.finish();
  std::cout << "best epoch " << result.best_epoch << " val_rmse=" << result.best_val_rmse << '\n';
}

void cmd_evaluate(const RunOptions& opts) {
  Run run("evaluate", opts);
  const Config& cfg = run.cfg();
  SimulatedData sim;
  const RCovSeries series = load_series(cfg, &sim);
  const SeriesSplit split = split_series(series, split_scheme(cfg));
  const std::string model = cfg.str("evaluate.model", "convlstm");
  const auto t0 = std::chrono::steady_clock::now();

  FittedModel fitted;
  if (model == "truth") {
    fitted.name = "Truth";
    fitted.parameters = "-";
    fitted.forecaster = [&series](std::span<const SpdMatrixd> h) { return series[Index(h.size())].matrix(); };
  } else if (model == "convlstm") {
    if (!cfg.has("evaluate.checkpoint")) throw ConfigError("evaluate.checkpoint is required for convlstm");
    const nn::ModelSpec spec = model_spec(cfg, series.dim());
    auto weights = std::make_shared<const nn::ModelWeights>(nn::load_checkpoint(cfg.str("evaluate.checkpoint", ""), spec));
    fitted.name = "ConvLSTM";
    fitted.parameters = std::to_string(nn::count_params(spec).weights_only);
    fitted.forecaster = convlstm_forecaster(weights, transform_spec(cfg));
  } else if ((model == "ma" || model == "ema") && cfg.has("evaluate.lag")) {
    const Index n = cfg.integer("evaluate.lag", 1);
    fitted = model == "ma" ? fit_ma(series, split, {n}, run.threads()) : fit_ema(series, split, {n}, run.threads());
  } else if (model == "mfa-var" && cfg.has("evaluate.order")) {
    fitted = fit_mfa_var(series, split, {cfg.integer("evaluate.factors", 1)}, {cfg.integer("evaluate.order", 1)},
                         run.threads());
  } else if (model == "mfa-dcaw" && cfg.has("evaluate.dcaw_p")) {
    fitted = fit_mfa_dcaw(series, split, {cfg.integer("evaluate.factors", 1)},
                          {{cfg.integer("evaluate.dcaw_p", 1), cfg.integer("evaluate.dcaw_q", 1)}}, run.threads());
  } else {
    fitted = fit_named(model, cfg, series, split, cfg.has_section("simulation") ? &sim : nullptr, run.threads());
  }

  EvalReport rep = evaluate_series(fitted.forecaster, series, split.test, fitted.name, run.threads());
  const double runtime = seconds_since(t0);
  run.write("per_day.csv", rep.per_day_csv());
  run.write("summary.csv", summary_header() + summary_row(fitted.name, csv_quote(fitted.parameters), rep, runtime));
  run.finish();
  std::cout << fitted.name << " " << fitted.parameters << " test mean_rmse=" << rep.mean_rmse
            << " mean_mae=" << rep.mean_mae << " days=" << rep.per_day.size() << '\n';
}

void cmd_ablate(const RunOptions& opts) {
  Run run("ablate", opts);
  const Config& cfg = run.cfg();
  const RCovSeries series = load_series(cfg);
  const SeriesSplit split = split_series(series, split_scheme(cfg));
  const nn::ModelSpec spec = model_spec(cfg, series.dim());
  const nn::TrainConfig base = train_config(cfg, run.threads());

  std::vector<TransformSpec> transforms;
  for (const auto& t : cfg.list("ablate.transforms", "none,cholesky,sqrt,sqrt-then-cholesky"))
    transforms.push_back(TransformSpec{parse_transform(t)});
  std::vector<nn::LossKind> losses;
  for (const auto& l : cfg.list("ablate.losses", "l1,l2,huber")) losses.push_back(nn::parse_loss_kind(l));

  struct Cell {
    TransformSpec transform;
    nn::LossKind loss;
    double rmse, mae;
    int best_epoch, epochs;
  };
  std::vector<Cell> cells;
  std::ostringstream grid;
  grid.precision(10);
  grid << "transform,loss,val_rmse,val_mae,best_epoch,epochs_run\n";
  for (const auto& t : transforms) {
    const WindowSet windows = make_windows(series, t, spec.lag);
    const nn::TrainingData data{windows, series, t, split.train, split.val};
    for (auto l : losses) {
      nn::TrainConfig tc = base;
      tc.loss.kind = l;
      const nn::TrainResult r = nn::train(spec, data, tc);
      const auto val_idx = windows.samples_targeting(split.val);
      const auto [rmse, mae] = nn::score_samples(r.best, data, val_idx, run.threads());
      cells.push_back({t, l, rmse, mae, r.best_epoch, static_cast<int>(r.history.size())});
      grid << to_string(t.kind) << ',' << nn::to_string(l) << ',' << rmse << ',' << mae << ',' << r.best_epoch << ','
           << r.history.size() << '\n';
      std::cout << to_string(t.kind) << " / " << nn::to_string(l) << ": val_rmse=" << rmse << " val_mae=" << mae << '\n';
    }
  }
  run.write("grid.csv", grid.str());

  auto table = [&](const char* label, auto select, auto name) {
    std::vector<const Cell*> rows;
    for (const auto& c : cells)
      if (select(c)) rows.push_back(&c);
    const Cell* best = nullptr;
    for (const auto* c : rows)
      if (!best || c->rmse < best->rmse) best = c;
    std::ostringstream os;
    os.precision(10);
    os << label << ",val_rmse,val_mae,best\n";
    for (const auto* c : rows) os << name(*c) << ',' << c->rmse << ',' << c->mae << ',' << (c == best ? 1 : 0) << '\n';
    return os.str();
  };
  run.write("by_transform.csv", table(
      "transform", [](const Cell& c) { return c.loss == nn::LossKind::Huber; },
      [](const Cell& c) { return to_string(c.transform.kind); }));
  run.write("by_loss.csv", table(
      "loss", [](const Cell& c) { return c.transform.kind == TransformKind::SqrtThenCholesky; },
      [](const Cell& c) { return std::string(nn::to_string(c.loss)); }));
  run.finish();
}

void cmd_compare(const RunOptions& opts) {
  Run run("compare", opts);
  const Config& cfg = run.cfg();
  const bool simulated = cfg.has_section("simulation");
  const auto models = cfg.list("compare.models", simulated ? "mfa-dcaw,convlstm,oracle" : "ma,ema,mfa-var,mfa-dcaw,convlstm");
  const SplitScheme scheme = split_scheme(cfg);

  struct Dataset {
    std::string tag;
    Innovation innovation = Innovation::Wishart;
    Index replication = 0;
  };
  std::vector<Dataset> datasets;
  Index reps = 1;
  if (simulated) {
    reps = cfg.integer("simulation.replications", 1);
    if (reps < 1) throw ConfigError("simulation.replications must be >= 1");
    for (const auto& name : cfg.list("simulation.innovations", cfg.str("simulation.innovation", "wishart")))
      for (Index k = 0; k < reps; ++k)
        datasets.push_back({name + "-" + std::to_string(k + 1), parse_innovation(name), k});
  } else {
    datasets.push_back({"data", Innovation::Wishart, 0});
  }

  std::ostringstream summary;
  summary << "dataset,model,parameters,val_rmse,test_rmse,test_mae,test_days,runtime_s\n";
  // test RMSE per (innovation, model, replication) for the simulation table
  std::map<std::pair<Innovation, std::string>, std::vector<double>> sim_rmse;
  for (const auto& ds : datasets) {
    SimulatedData sim;
    RCovSeries series;
    if (simulated) {
      SimulationSetup setup = simulation_setup(cfg, ds.innovation);
      setup.seed += static_cast<std::uint64_t>(ds.replication);
      sim = simulate(setup);
      series = sim.series;
    } else {
      series = load_series(cfg);
    }
    const SeriesSplit split = split_series(series, scheme);
    for (const auto& name : models) {
      const auto t0 = std::chrono::steady_clock::now();
      const FittedModel m = fit_named(name, cfg, series, split, simulated ? &sim : nullptr, run.threads());
      const EvalReport rep = evaluate_series(m.forecaster, series, split.test, m.name, run.threads());
      const double runtime = seconds_since(t0);
      summary << ds.tag << ',' << m.name << ',' << csv_quote(m.parameters) << ',' << num(m.val_rmse) << ','
              << num(rep.mean_rmse) << ',' << num(rep.mean_mae) << ',' << rep.per_day.size() << ',' << num(runtime)
              << '\n';
      std::cout << ds.tag << " " << m.name << " " << m.parameters << " test_rmse=" << rep.mean_rmse << '\n';
      sim_rmse[{ds.innovation, m.name}].push_back(rep.mean_rmse);
    }
  }
  run.write("summary.csv", summary.str());

  if (simulated) {
    std::ostringstream t2;
    t2.precision(10);
    t2 << "model";
    for (Index k = 1; k <= reps; ++k) t2 << ',' << k;
    t2 << ",mean\n";
    auto row = [&](const std::string& label, const std::vector<double>& v) {
      t2 << label;
      double s = 0.0;
      for (double x : v) {
        t2 << ',' << x;
        s += x;
      }
      t2 << ',' << s / double(v.size()) << '\n';
    };
    for (const auto& name : cfg.list("simulation.innovations", cfg.str("simulation.innovation", "wishart"))) {
      const Innovation inn = parse_innovation(name);
      const std::string tag = " (" + innovation_tag(inn) + ")";
      const auto dcaw = sim_rmse.find({inn, "MFA-DCAW"}), net = sim_rmse.find({inn, "ConvLSTM"}),
                 oracle = sim_rmse.find({inn, "Oracle"});
      if (dcaw != sim_rmse.end()) row("DCAW" + tag, dcaw->second);
      if (net != sim_rmse.end()) row("ConvLSTM" + tag, net->second);
      if (dcaw != sim_rmse.end() && net != sim_rmse.end()) {
        std::vector<double> diff;
        for (size_t k = 0; k < dcaw->second.size(); ++k) diff.push_back(dcaw->second[k] - net->second[k]);
        row("difference" + tag, diff);
      }
      if (oracle != sim_rmse.end()) row("Oracle" + tag, oracle->second);
    }
    run.write("simulation_table.csv", t2.str());
  }
  run.finish();
}

void cmd_convert(const RunOptions& opts) {
  Run run("convert", opts);
  const std::string input = run.cfg().str("convert.input", "");
  if (input.empty()) throw ConfigError("convert.input is required");
  if (fs::path(input).extension() == ".json") {
    const std::string out = run.cfg().str("convert.output", run.path("dataset.csv"));
    io::atomic_write(out, to_matrix_csv(read_dataset(input)));
    run.note_output(out);
  } else {
    const std::string out = run.cfg().str("convert.output", run.path("dataset.json"));
    const RCovSeries series = read_matrix_csv(input);
    write_dataset(out, series, "converted from " + input);
    run.note_output(out);
    std::cout << "converted T=" << series.size() << " d=" << series.dim() << " -> " << out << '\n';
  }
  run.finish();
}

int run_command(const std::string& command, const RunOptions& opts) {
  try {
    if (command == "simulate") cmd_simulate(opts);
    else if (command == "train") cmd_train(opts);
    else if (command == "evaluate") cmd_evaluate(opts);
    else if (command == "ablate") cmd_ablate(opts);
    else if (command == "compare") cmd_compare(opts);
    else if (command == "convert") cmd_convert(opts);
    else throw ConfigError("unknown command '" + command + "'");
    return kOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::Config: return kConfigError;
      case ErrorKind::Data: return kDataError;
      case ErrorKind::Numerical: return kNumericalError;
    }
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return kUnexpected;
}

}  // namespace rcov::cli
