#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unistd.h>

#include "rcov/cli/commands.hpp"
#include "rcov/cli/config.hpp"
#include "rcov/cli/dataset.hpp"
#include "rcov/cli/experiment.hpp"
#include "rcov/errors.hpp"
#include "rcov/io/files.hpp"
#include "test_support.hpp"

using namespace rcov;
using namespace rcov::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rcov_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.ini";
  io::atomic_write(p.string(), text);
  return p.string();
}

using Table = std::vector<std::vector<std::string>>;

Table read_csv(const fs::path& p) {
  Table rows;
  std::istringstream in(io::read_text(p.string()));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false;
    for (char ch : line) {
      if (ch == '"') quoted = !quoted;
      else if (ch == ',' && !quoted) row.push_back(std::exchange(cell, {}));
      else cell += ch;
    }
    row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

RCovSeries random_series(Index t, Index d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SpdMatrixd> m;
  for (Index k = 0; k < t; ++k) m.push_back(test::random_spd(d, rng));
  return RCovSeries(std::move(m));
}

const char* kTinySim = R"(
[simulation]
length = 120
burn_in = 20
dim = 5
seed = 3
)";

const char* kTinyModel = R"(
[model]
lag = 4
layers = convlstm:1:2:3,conv:2:2:3,linear:2:1:1
[train]
batch_size = 16
max_epochs = 2
patience = 5
)";

}  // namespace

TEST_CASE("config parsing, typed access and rejection of unknown keys") {
  const Config c = Config::from_string(
      "; comment\n[train]\nlr = 0.002\nbatch_size = 64\nloss = l2\n# another\n"
      "[baselines]\nma_lags = 1-3, 7\n[model]\npeephole = yes\n");
  CHECK(c.real("train.lr", 0) == 0.002);
  CHECK(c.integer("train.batch_size", 0) == 64);
  CHECK(c.str("train.loss", "") == "l2");
  CHECK(c.flag("model.peephole", false));
  CHECK(c.int_list("baselines.ma_lags", "") == std::vector<Index>{1, 2, 3, 7});
  CHECK(c.real("train.beta1", 0.9) == 0.9);
  CHECK(c.has_section("train"));
  CHECK_FALSE(c.has_section("simulation"));
  CHECK(c.canonical() == "baselines.ma_lags=1-3, 7\nmodel.peephole=yes\ntrain.batch_size=64\ntrain.loss=l2\ntrain.lr=0.002\n");

  CHECK_THROWS_AS(Config::from_string("[train]\nlearning_rate = 1\n"), ConfigError);
  CHECK_THROWS_AS(Config::from_string("lr = 1\n"), ConfigError);
  CHECK_THROWS_AS(Config::from_string("[train\nlr = 1\n"), ConfigError);
  CHECK_THROWS_AS(Config::from_string("[train]\nlr = fast\n").real("train.lr", 0), ConfigError);
  CHECK_THROWS_AS(Config::from_string("[train]\nbatch_size = 1.5\n").integer("train.batch_size", 0), ConfigError);
  CHECK_THROWS_AS(Config::from_string("[baselines]\nma_lags = 5-2\n").int_list("baselines.ma_lags", ""), ConfigError);
  CHECK_THROWS_AS(Config::from_file("/nonexistent/run.ini"), ConfigError);
}

TEST_CASE("shipped example config holds the training defaults") {
  const Config c = Config::from_file(std::string(RCOV_SOURCE_DIR) + "/configs/example.ini");
  const nn::TrainConfig t = train_config(c, 1);
  CHECK(t.adam.lr == 1e-3);
  CHECK(t.adam.beta1 == 0.9);
  CHECK(t.adam.beta2 == 0.999);
  CHECK(t.adam.weight_decay == 1e-5);
  CHECK(t.batch_size == 128);
  CHECK(t.l1_lambda == 0.005);
  CHECK(t.loss.kind == nn::LossKind::Huber);
  CHECK(t.loss.delta == 300);
  const SimulationSetup s = simulation_setup(c);
  CHECK(s.options.length == 5000);
  CHECK(s.params.nu == 5);
  CHECK(s.params.nu1 == 10);
  CHECK(s.params.nu2 == 8);
  CHECK(nn::count_params(model_spec(c, 15)).weights_only == 3760);
  for (const char* name : {"djia.ini", "sp100.ini", "simulation_wishart.ini", "simulation_matrixf.ini", "simulation_study.ini"})
    CHECK_NOTHROW(Config::from_file(std::string(RCOV_SOURCE_DIR) + "/configs/" + name));
}

TEST_CASE("dataset round trip is byte identical") {
  const fs::path dir = scratch("roundtrip");
  RCovSeries s = random_series(7, 4, 11);
  write_dataset((dir / "a.json").string(), s, "unit test");
  const RCovSeries back = read_dataset((dir / "a.json").string());
  REQUIRE(back.size() == 7);
  REQUIRE(back.dim() == 4);
  for (Index t = 0; t < 7; ++t) CHECK(back[t].matrix() == s[t].matrix());
  CHECK(back.labels() == s.labels());
  CHECK(back.assets() == s.assets());
  write_dataset((dir / "b.json").string(), back, "unit test");
  CHECK(io::read_bytes((dir / "a.bin").string()) == io::read_bytes((dir / "b.bin").string()));
  CHECK(fs::file_size(dir / "a.bin") == 8u * 7u * 16u);

  // little-endian [t][i][j] layout
  const auto bytes = io::read_bytes((dir / "a.bin").string());
  CHECK(io::get_f64_le(bytes.data() + 8 * (2 * 16 + 1 * 4 + 3)) == s[2].matrix()(1, 3));

  const auto meta = nlohmann::json::parse(io::read_text((dir / "a.json").string()));
  CHECK(meta["format_version"] == kDatasetFormatVersion);
  CHECK(meta["d"] == 4);
  CHECK(meta["T"] == 7);
  CHECK(meta["provenance"] == "unit test");
}

TEST_CASE("corrupt or missing datasets raise DataError") {
  const fs::path dir = scratch("corrupt");
  write_dataset((dir / "a.json").string(), random_series(3, 3, 2), "x");
  CHECK_THROWS_AS(read_dataset((dir / "missing.json").string()), DataError);

  auto bytes = io::read_bytes((dir / "a.bin").string());
  io::atomic_write((dir / "a.bin").string(), std::span<const char>(bytes.data(), bytes.size() - 8));
  CHECK_THROWS_AS(read_dataset((dir / "a.json").string()), DataError);

  // break symmetry of slice 1, cell (0, 2)
  io::atomic_write((dir / "a.bin").string(), std::span<const char>(bytes.data(), bytes.size()));
  std::string asym(bytes.begin(), bytes.end());
  std::vector<char> patch;
  io::put_f64_le(patch, 1e3);
  asym.replace(8 * (9 + 2), 8, patch.data(), 8);
  io::atomic_write((dir / "a.bin").string(), asym);
  CHECK_THROWS_AS(read_dataset((dir / "a.json").string()), DataError);

  // symmetric but indefinite slice
  std::string indef(bytes.begin(), bytes.end());
  const double neg[9] = {1, 2, 0, 2, 1, 0, 0, 0, 1};
  for (int k = 0; k < 9; ++k) {
    std::vector<char> cell;
    io::put_f64_le(cell, neg[k]);
    indef.replace(8 * k, 8, cell.data(), 8);
  }
  io::atomic_write((dir / "a.bin").string(), indef);
  CHECK_THROWS_AS(read_dataset((dir / "a.json").string()), DataError);

  io::atomic_write((dir / "bad.json").string(), std::string("{not json"));
  CHECK_THROWS_AS(read_dataset((dir / "bad.json").string()), DataError);
}

TEST_CASE("matrix CSV conversion round trip") {
  const fs::path dir = scratch("csv");
  const RCovSeries s = random_series(4, 3, 5);
  io::atomic_write((dir / "m.csv").string(), to_matrix_csv(s));
  const RCovSeries back = read_matrix_csv((dir / "m.csv").string());
  REQUIRE(back.size() == 4);
  for (Index t = 0; t < 4; ++t) CHECK((back[t].matrix() - s[t].matrix()).cwiseAbs().maxCoeff() == 0.0);
  io::atomic_write((dir / "short.csv").string(), std::string("day,a,b\n1,1,0\n"));
  CHECK_THROWS_AS(read_matrix_csv((dir / "short.csv").string()), DataError);

  const std::string cfg = write_config(dir, "[convert]\ninput = " + (dir / "m.csv").string() + "\n");
  REQUIRE(run_command("convert", {cfg, std::nullopt, (dir / "out").string(), 1}) == kOk);
  const RCovSeries via_cli = read_dataset((dir / "out" / "dataset.json").string());
  CHECK(via_cli.size() == 4);
}

TEST_CASE("simulate: lengths, determinism and seed override") {
  const fs::path dir = scratch("simulate");
  for (const char* inn : {"wishart", "matrix-f"}) {
    const std::string cfg =
        write_config(dir, std::string("[simulation]\nlength = 5000\ninnovation = ") + inn + "\nseed = 9\n");
    REQUIRE(run_command("simulate", {cfg, std::nullopt, (dir / inn).string(), 1}) == kOk);
    CHECK(read_dataset((dir / inn / "dataset.json").string()).size() == 5000);
  }
  const std::string cfg = write_config(dir, kTinySim);
  REQUIRE(run_command("simulate", {cfg, std::nullopt, (dir / "a").string(), 1}) == kOk);
  REQUIRE(run_command("simulate", {cfg, std::nullopt, (dir / "b").string(), 1}) == kOk);
  REQUIRE(run_command("simulate", {cfg, 4, (dir / "c").string(), 1}) == kOk);
  const auto a = io::read_bytes((dir / "a" / "dataset.bin").string());
  CHECK(a == io::read_bytes((dir / "b" / "dataset.bin").string()));
  CHECK(a != io::read_bytes((dir / "c" / "dataset.bin").string()));
  CHECK(a.size() == 8u * 120u * 25u);

  const auto m = nlohmann::json::parse(io::read_text((dir / "c" / "manifest.json").string()));
  CHECK(m["command"] == "simulate");
  CHECK(m["config"]["simulation.seed"] == "4");
  CHECK(m["seed_override"] == 4);
  CHECK(m["version"].is_string());
  CHECK(m["config_digest"].get<std::string>().size() == 16);
  const auto ma = nlohmann::json::parse(io::read_text((dir / "a" / "manifest.json").string()));
  CHECK(ma["config_digest"] != m["config_digest"]);
}

TEST_CASE("exit codes distinguish config, data and numerical failures") {
  const fs::path dir = scratch("exit");
  const std::string out = (dir / "out").string();
  CHECK(run_command("simulate", {"", std::nullopt, out, 1}) == kConfigError);
  CHECK(run_command("simulate", {(dir / "none.ini").string(), std::nullopt, out, 1}) == kConfigError);
  CHECK(run_command("frobnicate", {write_config(dir, kTinySim), std::nullopt, out, 1}) == kConfigError);
  CHECK(run_command("simulate", {write_config(dir, "[train]\nlr = 1\n"), std::nullopt, out, 1}) == kConfigError);
  CHECK(run_command("train", {write_config(dir, "[train]\nlrate = 1\n"), std::nullopt, out, 1}) == kConfigError);
  CHECK(run_command("train", {write_config(dir, "[train]\nlr = 1\n"), std::nullopt, out, 1}) == kConfigError);
  CHECK(run_command("train", {write_config(dir, "[data]\npath = " + (dir / "nope.json").string() + "\n"),
                              std::nullopt, out, 1}) == kDataError);
  CHECK(run_command("train", {write_config(dir, std::string(kTinySim) + kTinyModel + "lr = 1e200\n"),
                              std::nullopt, out, 1}) == kNumericalError);
  CHECK(run_command("train", {write_config(dir, std::string(kTinySim) + kTinyModel + "lr = -1\n"),
                              std::nullopt, out, 1}) == kConfigError);
}

TEST_CASE("train reports parameter counts and writes checkpoint and history") {
  const fs::path dir = scratch("train");
  const std::string cfg = write_config(dir,
      "[simulation]\nlength = 60\nburn_in = 10\ndim = 25\n[model]\npreset = djia\nlag = 3\n"
      "[train]\nmax_epochs = 1\nbatch_size = 32\n");
  REQUIRE(run_command("train", {cfg, std::nullopt, (dir / "djia").string(), 1}) == kOk);
  const auto params = nlohmann::json::parse(io::read_text((dir / "djia" / "params.json").string()));
  CHECK(params["weights_only"] == 1016);
  CHECK(fs::exists(dir / "djia" / "checkpoint.bin"));
  const Table hist = read_csv(dir / "djia" / "history.csv");
  REQUIRE(hist.size() == 2);
  CHECK(hist[0] == std::vector<std::string>{"epoch", "train_loss", "val_rmse", "val_mae"});

  const std::string sim = write_config(dir, std::string(kTinySim) + "[model]\nlag = 4\n[train]\nmax_epochs = 1\n");
  REQUIRE(run_command("train", {sim, std::nullopt, (dir / "sim").string(), 1}) == kOk);
  CHECK(nlohmann::json::parse(io::read_text((dir / "sim" / "params.json").string()))["weights_only"] == 3760);
}

TEST_CASE("evaluate: truth and constant-series MA(1) give zero error, summary schema") {
  const fs::path dir = scratch("evaluate");
  const std::string truth = write_config(dir, std::string(kTinySim) + "[evaluate]\nmodel = truth\n");
  REQUIRE(run_command("evaluate", {truth, std::nullopt, (dir / "truth").string(), 1}) == kOk);
  const Table per_day = read_csv(dir / "truth" / "per_day.csv");
  REQUIRE(per_day.size() == 1 + 24);  // 20% of 120 days
  CHECK(per_day[0] == std::vector<std::string>{"day", "rmse", "mae", "psd"});
  for (size_t k = 1; k < per_day.size(); ++k) {
    CHECK(std::stod(per_day[k][1]) == 0.0);
    CHECK(std::stod(per_day[k][2]) == 0.0);
  }
  const Table summary = read_csv(dir / "truth" / "summary.csv");
  REQUIRE(summary.size() == 2);
  CHECK(summary[0] == std::vector<std::string>{"model", "parameters", "mean_rmse", "mean_mae", "runtime_s"});
  CHECK(summary[1][0] == "Truth");
  CHECK(std::stod(summary[1][2]) == 0.0);

  Rng rng(4);
  const SpdMatrixd sigma = test::random_spd(3, rng);
  write_dataset((dir / "const.json").string(), RCovSeries(std::vector<SpdMatrixd>(50, sigma)), "constant");
  const std::string ma = write_config(dir, "[data]\npath = " + (dir / "const.json").string() +
                                               "\n[evaluate]\nmodel = ma\nlag = 1\n");
  REQUIRE(run_command("evaluate", {ma, std::nullopt, (dir / "ma").string(), 1}) == kOk);
  const Table ma_summary = read_csv(dir / "ma" / "summary.csv");
  CHECK(ma_summary[1][0] == "MA");
  CHECK(ma_summary[1][1] == "(1)");
  CHECK(std::stod(ma_summary[1][2]) == 0.0);
  CHECK(std::stod(ma_summary[1][3]) == 0.0);

  const std::string net = write_config(dir, std::string(kTinySim) + kTinyModel);
  REQUIRE(run_command("train", {net, std::nullopt, (dir / "net").string(), 1}) == kOk);
  const std::string ev = write_config(dir, std::string(kTinySim) + kTinyModel +
                                               "[evaluate]\nmodel = convlstm\ncheckpoint = " +
                                               (dir / "net" / "checkpoint.bin").string() + "\n");
  REQUIRE(run_command("evaluate", {ev, std::nullopt, (dir / "netev").string(), 1}) == kOk);
  CHECK(std::stod(read_csv(dir / "netev" / "summary.csv")[1][2]) > 0.0);
  const std::string wrong = write_config(dir, std::string(kTinySim) +
                                                  "[model]\nlag = 4\n[evaluate]\nmodel = convlstm\ncheckpoint = " +
                                                  (dir / "net" / "checkpoint.bin").string() + "\n");
  CHECK(run_command("evaluate", {wrong, std::nullopt, (dir / "wrong").string(), 1}) == kDataError);
}

TEST_CASE("MA lag selection recovers the lag that is optimal by construction") {
  // x_t = mean(x_{t-1}, x_{t-2}, x_{t-3}) + noise, so the 3-day average is the
  // conditional mean of the next day.
  Rng rng(21);
  std::vector<double> x{100.0, 104.0, 97.0};
  for (int t = 3; t < 900; ++t) x.push_back((x[t - 1] + x[t - 2] + x[t - 3]) / 3.0 + rng.normal());
  Rng mrng(3);
  const MatrixXd base = test::random_spd(3, mrng).matrix();
  std::vector<SpdMatrixd> m;
  for (double v : x) m.emplace_back(MatrixXd(v * base));
  const RCovSeries series(std::move(m));
  const SeriesSplit split = split_series(series, SplitScheme::fractional(0.7, 0.1, 0.2));
  std::vector<Index> lags;
  for (Index n = 1; n <= 10; ++n) lags.push_back(n);
  const FittedModel ma = fit_ma(series, split, lags);
  CHECK(ma.parameters == "(3)");
}

TEST_CASE("ablate emits the 4 x 3 grid and its two tables deterministically") {
  const fs::path dir = scratch("ablate");
  const std::string cfg = write_config(dir, std::string(kTinySim) + kTinyModel);
  REQUIRE(run_command("ablate", {cfg, std::nullopt, (dir / "a").string(), 1}) == kOk);
  const Table grid = read_csv(dir / "a" / "grid.csv");
  REQUIRE(grid.size() == 1 + 12);
  CHECK(grid[0] == std::vector<std::string>{"transform", "loss", "val_rmse", "val_mae", "best_epoch", "epochs_run"});
  const Table by_transform = read_csv(dir / "a" / "by_transform.csv"), by_loss = read_csv(dir / "a" / "by_loss.csv");
  REQUIRE(by_transform.size() == 1 + 4);
  REQUIRE(by_loss.size() == 1 + 3);
  for (const Table* t : {&by_transform, &by_loss}) {
    int flagged = 0;
    double best = 1e300, flagged_rmse = 0;
    for (size_t k = 1; k < t->size(); ++k) {
      const double r = std::stod((*t)[k][1]);
      best = std::min(best, r);
      if ((*t)[k][3] == "1") {
        ++flagged;
        flagged_rmse = r;
      }
    }
    CHECK(flagged == 1);
    CHECK(flagged_rmse == best);
  }
  REQUIRE(run_command("ablate", {cfg, std::nullopt, (dir / "b").string(), 1}) == kOk);
  CHECK(io::read_text((dir / "a" / "grid.csv").string()) == io::read_text((dir / "b" / "grid.csv").string()));
}

TEST_CASE("compare scores every model on the same test days and emits the simulation table") {
  const fs::path dir = scratch("compare");
  const std::string cfg = write_config(dir, std::string(kTinyModel) +
                                                "[simulation]\nlength = 120\nburn_in = 20\ndim = 5\nseed = 3\n"
                                                "innovations = wishart,matrix-f\nreplications = 2\n"
                                                "[compare]\nmodels = ma,ema,mfa-var,mfa-dcaw,convlstm,oracle\n"
                                                "[baselines]\nfactor_dims = 1-2\ndcaw_orders = 1:1\n");
  REQUIRE(run_command("compare", {cfg, std::nullopt, (dir / "out").string(), 1}) == kOk);
  const Table s = read_csv(dir / "out" / "summary.csv");
  REQUIRE(s.size() == 1 + 4 * 6);
  CHECK(s[0] == std::vector<std::string>{"dataset", "model", "parameters", "val_rmse", "test_rmse", "test_mae",
                                         "test_days", "runtime_s"});
  for (size_t k = 1; k < s.size(); ++k) {
    CHECK(s[k][6] == "24");
    CHECK_FALSE(s[k][2].empty());
  }
  const Table t2 = read_csv(dir / "out" / "simulation_table.csv");
  REQUIRE(t2.size() == 1 + 8);
  CHECK(t2[0] == std::vector<std::string>{"model", "1", "2", "mean"});
  std::vector<std::string> labels;
  for (size_t k = 1; k < t2.size(); ++k) labels.push_back(t2[k][0]);
  CHECK(labels == std::vector<std::string>{"DCAW (W)", "ConvLSTM (W)", "difference (W)", "Oracle (W)", "DCAW (F)",
                                           "ConvLSTM (F)", "difference (F)", "Oracle (F)"});
  for (size_t k = 1; k < t2.size(); ++k) {
    const double mean = (std::stod(t2[k][1]) + std::stod(t2[k][2])) / 2.0;
    CHECK(std::stod(t2[k][3]) == doctest::Approx(mean).epsilon(1e-9));
  }

  const std::string data = write_config(dir, std::string("[data]\npath = ") + (dir / "out" / "x.json").string() +
                                                 "\n[compare]\nmodels = oracle\n");
  CHECK(run_command("compare", {data, std::nullopt, (dir / "d").string(), 1}) == kDataError);
}
