#include <doctest.h>

#include <filesystem>

#include "rcov/nn/train.hpp"
#include "rcov/simulator.hpp"
#include "test_support.hpp"

using namespace rcov;
using namespace rcov::nn;

namespace {

ModelSpec toy_spec(Index d, Index lag, bool peephole = false) {
  ModelSpec s;
  s.lag = lag;
  s.dim = d;
  s.layers = ModelSpec::parse_layers("convlstm:1:2:3, conv:2:3:3, linear:3:1:1");
  s.layers[0].peephole = peephole;
  return s;
}

std::vector<MatrixXd> random_window(Index lag, Index d, Rng& rng) {
  std::vector<MatrixXd> w;
  for (Index t = 0; t < lag; ++t) w.push_back(rng.normal_matrix(d, d));
  return w;
}

/// Windows over random SPD matrices, already transformed.
WindowSet random_windows(Index t_len, Index d, Index lag, Rng& rng) {
  std::vector<MatrixXd> days;
  for (Index t = 0; t < t_len; ++t)
    days.push_back(forward_transform(test::random_spd(d, rng, 0.2), {}));
  return WindowSet(days, lag);
}

double max_rel_error(const VectorXd& a, const VectorXd& b) {
  const double floor = 1e-6 * std::max(a.cwiseAbs().maxCoeff(), 1e-12);
  double worst = 0.0;
  for (Index i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a(i) - b(i)) / std::max({std::abs(a(i)), std::abs(b(i)), floor}));
  return worst;
}

}  // namespace

TEST_CASE("conv2d_same hand cases") {
  FeatureMap ones{MatrixXd::Ones(1, 9), 3, 3};
  const FeatureMap out = conv2d_same(ones, MatrixXd::Ones(1, 9), 3, 3, VectorXd());
  MatrixXd expected(3, 3);
  expected << 4, 6, 4, 6, 9, 6, 4, 6, 4;
  CHECK(out.channel(0) == expected);

  Rng rng(1);
  const FeatureMap x{rng.normal_matrix(2, 20), 4, 5};
  CHECK(conv2d_same(x, MatrixXd::Identity(2, 2), 1, 1, VectorXd()).data == x.data);

  const FeatureMap y{rng.normal_matrix(2, 20), 4, 5};
  const MatrixXd k = rng.normal_matrix(3, 2 * 15);
  const FeatureMap lhs = conv2d_same({2.5 * x.data - 0.5 * y.data, 4, 5}, k, 3, 5, VectorXd());
  const MatrixXd rhs = 2.5 * conv2d_same(x, k, 3, 5, VectorXd()).data - 0.5 * conv2d_same(y, k, 3, 5, VectorXd()).data;
  CHECK((lhs.data - rhs).cwiseAbs().maxCoeff() < 1e-12);

  // Cross-correlation: a kernel with a single 1 to the right shifts the image left.
  MatrixXd shift = MatrixXd::Zero(1, 9);
  shift(0, 5) = 1.0;  // (ky, kx) = (1, 2)
  const FeatureMap ramp{(MatrixXd(1, 9) << 1, 2, 3, 4, 5, 6, 7, 8, 9).finished(), 3, 3};
  MatrixXd shifted(3, 3);
  shifted << 2, 3, 0, 5, 6, 0, 8, 9, 0;
  CHECK(conv2d_same(ramp, shift, 3, 3, VectorXd()).channel(0) == shifted);

  CHECK_THROWS_AS(conv2d_same(ones, MatrixXd::Ones(1, 4), 2, 2, VectorXd()), ShapeMismatch);
  CHECK_THROWS_AS(conv2d_same(ones, MatrixXd::Ones(1, 8), 3, 3, VectorXd()), ShapeMismatch);
}

TEST_CASE("convlstm_step with zero weights") {
  Rng rng(2);
  const Index hidden = 3, cells = 16;
  const MatrixXd kernel = MatrixXd::Zero(4 * hidden, (1 + hidden) * 9);
  const LstmState prev{rng.normal_matrix(hidden, cells), rng.normal_matrix(hidden, cells)};
  const LstmState next = convlstm_step(rng.normal_matrix(1, cells), prev,
                                       {kernel, VectorXd(), MatrixXd(), 3, 3}, 4, 4);
  CHECK((next.c - 0.5 * prev.c).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((next.h - 0.5 * (0.5 * prev.c).array().tanh().matrix()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("convlstm_step matches a scalar LSTM") {
  // Gate rows: input, forget, candidate, output; columns: x, h.
  MatrixXd kernel(4, 2);
  kernel << 0.3, -0.2, 0.5, 0.1, -0.7, 0.4, 0.2, 0.9;
  const VectorXd bias = (VectorXd(4) << 0.1, 1.0, -0.3, 0.05).finished();
  const double x = 0.8, h = -0.4, c = 0.6;
  const double i = 1 / (1 + std::exp(-(0.3 * x - 0.2 * h + 0.1)));
  const double f = 1 / (1 + std::exp(-(0.5 * x + 0.1 * h + 1.0)));
  const double g = std::tanh(-0.7 * x + 0.4 * h - 0.3);
  const double o = 1 / (1 + std::exp(-(0.2 * x + 0.9 * h + 0.05)));
  const double c_new = f * c + i * g;
  const double h_new = o * std::tanh(c_new);
  const LstmState out = convlstm_step(MatrixXd::Constant(1, 1, x),
                                      {MatrixXd::Constant(1, 1, h), MatrixXd::Constant(1, 1, c)},
                                      {kernel, bias, MatrixXd(), 1, 1}, 1, 1);
  CHECK(std::abs(out.c(0, 0) - c_new) < 1e-12);
  CHECK(std::abs(out.h(0, 0) - h_new) < 1e-12);

  // Peepholes on input/forget use c_prev, on output use c_t.
  const MatrixXd peep = (MatrixXd(3, 1) << 0.2, -0.3, 0.4).finished();
  const double ip = 1 / (1 + std::exp(-(0.3 * x - 0.2 * h + 0.1 + 0.2 * c)));
  const double fp = 1 / (1 + std::exp(-(0.5 * x + 0.1 * h + 1.0 - 0.3 * c)));
  const double cp = fp * c + ip * g;
  const double op = 1 / (1 + std::exp(-(0.2 * x + 0.9 * h + 0.05 + 0.4 * cp)));
  const LstmState outp = convlstm_step(MatrixXd::Constant(1, 1, x),
                                       {MatrixXd::Constant(1, 1, h), MatrixXd::Constant(1, 1, c)},
                                       {kernel, bias, peep, 1, 1}, 1, 1);
  CHECK(std::abs(outp.h(0, 0) - op * std::tanh(cp)) < 1e-12);
}

TEST_CASE("hidden state stays inside (-1, 1)") {
  Rng rng(3);
  const Index hidden = 4, cells = 9;
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd kernel = 5.0 * rng.normal_matrix(4 * hidden, (1 + hidden) * 9);
    LstmState s{MatrixXd::Zero(hidden, cells), MatrixXd::Zero(hidden, cells)};
    for (int t = 0; t < 10; ++t) {
      s = convlstm_step(10.0 * rng.normal_matrix(1, cells), s, {kernel, VectorXd(), MatrixXd(), 3, 3}, 3, 3);
      CHECK(s.h.cwiseAbs().maxCoeff() < 1.0);
    }
  }
}

TEST_CASE("parameter counts") {
  CHECK(count_params(ModelSpec::djia()).weights_only == 1016);
  CHECK(count_params(ModelSpec::sp100()).weights_only == 34912);
  CHECK(count_params(ModelSpec::simulation(60)).weights_only == 3760);
  // Biases: 4H for the ConvLstm plus one per conv output channel.
  CHECK(count_params(ModelSpec::djia()).total == 1016 + 16 + 8 + 1);
  ModelSpec p = ModelSpec::djia(5);
  p.layers[0].peephole = true;
  CHECK(count_params(p).total == 1016 + 16 + 8 + 1 + 3 * 4 * 25);
  CHECK(count_params(p).weights_only == 1016);
}

TEST_CASE("spec validation and layer text") {
  ModelSpec s = ModelSpec::simulation(5);
  CHECK(ModelSpec::parse_layers(s.layers_string()).size() == 3);
  CHECK(ModelSpec::parse_layers(s.layers_string())[1].out_channels == 16);
  s.layers[1].kh = 2;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = ModelSpec::simulation(5);
  s.layers.back().kind = LayerKind::ConvLRelu;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = ModelSpec::simulation(5);
  s.layers[2].in_channels = 4;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  CHECK_THROWS_AS(ModelSpec::parse_layers("pool:1:2:3"), ConfigError);
  CHECK_THROWS_AS(ModelSpec::preset("resnet", 5), ConfigError);
}

TEST_CASE("forward: shapes, zero weights and last-layer linearity") {
  Rng rng(4);
  for (const auto& spec : {ModelSpec::djia(25), ModelSpec::simulation(60, 2)}) {
    const ModelWeights w = init_weights(spec, 1);
    const auto window = random_window(spec.lag, spec.dim, rng);
    const MatrixXd out = forward(w, window);
    CHECK(out.rows() == spec.dim);
    CHECK(out.cols() == spec.dim);
    for (const auto& m : layer_outputs(w, window)) CHECK(m.data.cols() == spec.cells());
  }

  const ModelSpec spec = toy_spec(5, 4);
  const auto window = random_window(4, 5, rng);
  CHECK(forward(ModelWeights(spec), window).isZero(0.0));

  ModelWeights w = init_weights(spec, 7);
  w.bias(2).setZero();
  const MatrixXd base = forward(w, window);
  w.kernel(2) *= 2.0;
  CHECK(forward(w, window) == 2.0 * base);

  CHECK_THROWS_AS(forward(w, random_window(3, 5, rng)), ShapeMismatch);
  CHECK_THROWS_AS(forward(w, random_window(4, 6, rng)), ShapeMismatch);
}

TEST_CASE("huber loss") {
  CHECK(huber(0.5, 1.0) == 0.125);
  CHECK(huber(2.0, 1.0) == 1.5);
  CHECK(huber(-2.0, 1.0) == 1.5);
  const MatrixXd target = MatrixXd::Zero(1, 2);
  const MatrixXd pred = (MatrixXd(1, 2) << 3, 4).finished();
  CHECK(sample_loss(pred, target, {LossKind::Huber, 100.0, HuberMode::MatrixNorm}) == 12.5);
  // e1 = 7 > delta = 5: 5 * (7 - 2.5).
  CHECK(sample_loss(pred, target, {LossKind::Huber, 5.0, HuberMode::MatrixNorm}) == 22.5);
  // Cell-wise, delta = 3.5: 4.5 + 3.5 * (4 - 1.75).
  CHECK(sample_loss(pred, target, {LossKind::Huber, 3.5, HuberMode::CellWise}) == doctest::Approx(4.5 + 7.875));
  CHECK(sample_loss(pred, target, {LossKind::L1}) == 7.0);
  CHECK(sample_loss(pred, target, {LossKind::L2}) == 12.5);
  CHECK_THROWS_AS(sample_loss(pred, MatrixXd::Zero(2, 1), {}), ShapeMismatch);

  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const MatrixXd a = rng.normal_matrix(3, 3), b = rng.normal_matrix(3, 3);
    const double delta = 0.1 + 5.0 * rng.uniform();
    for (auto mode : {HuberMode::MatrixNorm, HuberMode::CellWise}) {
      CHECK(sample_loss(a, b, {LossKind::Huber, delta, mode}) >= 0.0);
      CHECK(sample_loss(a, a, {LossKind::Huber, delta, mode}) == 0.0);
    }
  }
}

TEST_CASE("backward matches central finite differences") {
  Rng rng(6);
  const Index d = 4, lag = 3;
  const WindowSet windows = random_windows(8, d, lag, rng);
  const std::vector<Index> samples{0, 2, 4};

  struct Case {
    LossConfig loss;
    bool peephole;
  };
  const std::vector<Case> cases{
      {{LossKind::Huber, 1e4, HuberMode::MatrixNorm}, false},   // quadratic branch
      {{LossKind::Huber, 0.5, HuberMode::MatrixNorm}, false},   // linear branch
      {{LossKind::Huber, 0.15, HuberMode::CellWise}, false},
      {{LossKind::L2}, true},
      {{LossKind::Huber, 1e4, HuberMode::MatrixNorm}, true},
  };
  for (const auto& c : cases) {
    const ModelSpec spec = toy_spec(d, lag, c.peephole);
    ModelWeights w = init_weights(spec, 11);
    w.values += 0.1 * rng.normal_matrix(w.values.size(), 1);
    const double l1 = 0.01;

    VectorXd grad;
    const double f0 = batch_objective(w, windows, samples, c.loss, l1, &grad);
    CHECK(f0 == doctest::Approx(batch_objective(w, windows, samples, c.loss, l1)).epsilon(1e-14));

    VectorXd fd(w.values.size());
    const double h = 1e-5;
    for (Index i = 0; i < w.values.size(); ++i) {
      const double keep = w.values(i);
      w.values(i) = keep + h;
      const double fp = batch_objective(w, windows, samples, c.loss, l1);
      w.values(i) = keep - h;
      const double fm = batch_objective(w, windows, samples, c.loss, l1);
      w.values(i) = keep;
      fd(i) = (fp - fm) / (2 * h);
    }
    CHECK(max_rel_error(grad, fd) < 1e-4);
  }
}

TEST_CASE("gradient special cases") {
  const ModelSpec spec = toy_spec(3, 2);
  const WindowSet zeros(std::vector<MatrixXd>(4, MatrixXd::Zero(3, 3)), 2);
  const std::vector<Index> all{0, 1};
  VectorXd grad;
  batch_objective(ModelWeights(spec), zeros, all, {}, 0.005, &grad);
  CHECK(grad.isZero(0.0));

  Rng rng(8);
  const WindowSet windows = random_windows(6, 3, 2, rng);
  const ModelWeights w = init_weights(spec, 3);
  VectorXd with_l1, without;
  batch_objective(w, windows, all, {}, 0.25, &with_l1);
  batch_objective(w, windows, all, {}, 0.0, &without);
  const VectorXd expected = 0.25 * w.values.array().sign().matrix().cwiseProduct(w.layout.kernel_mask());
  CHECK((with_l1 - without - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("adam") {
  VectorXd w = VectorXd::LinSpaced(5, -1.0, 1.0);
  const VectorXd start = w;
  AdamState s;
  AdamConfig cfg;
  cfg.weight_decay = 0.0;
  const VectorXd g = (VectorXd(5) << 0.3, -2.0, 1e-3, 5.0, -0.01).finished();
  adam_step(w, g, s, cfg);
  const VectorXd step = start - w;
  for (Index i = 0; i < 5; ++i) CHECK(std::abs(std::abs(step(i)) - cfg.lr) < 1e-6);
  CHECK((step.array().sign() == g.array().sign()).all());

  VectorXd v = start;
  AdamState s2;
  for (int k = 0; k < 5; ++k) adam_step(v, VectorXd::Zero(5), s2, cfg);
  CHECK(v == start);

  VectorXd a = start, b = start;
  AdamState sa, sb;
  cfg.weight_decay = 1e-5;
  for (int k = 0; k < 10; ++k) {
    adam_step(a, g * (k + 1), sa, cfg);
    adam_step(b, g * (k + 1), sb, cfg);
  }
  CHECK(a == b);
}

TEST_CASE("checkpoint round trip") {
  const ModelSpec spec = ModelSpec::djia(6, 5);
  const ModelWeights w = init_weights(spec, 42);
  const auto path = (std::filesystem::temp_directory_path() / "rcov_test_ckpt.bin").string();
  save_checkpoint(path, w);
  const ModelWeights back = load_checkpoint(path, spec);
  CHECK(back.values == w.values);
  CHECK_THROWS_AS(load_checkpoint(path, ModelSpec::djia(7, 5)), DataError);
  CHECK(spec_digest(spec) != spec_digest(ModelSpec::simulation(6, 5)));
  std::filesystem::remove(path);
}

namespace {

struct ToyData {
  RCovSeries series;
  WindowSet windows;
  SeriesSplit split;
};

ToyData toy_data(Index t_len, Index d, Index lag, std::uint64_t seed) {
  SimulationOptions opts;
  opts.length = t_len;
  Rng rng(seed);
  CawParams p = CawParams::reference();
  const auto path = simulate_caw(p, opts, rng);
  const MfaEmbedding emb = make_embedding(d, 3, RandomOrthonormalSource{seed, 0.1});
  ToyData out{embed_factors(path.factors, emb), {}, {}};
  out.windows = make_windows(out.series, {}, lag);
  out.split = split_series(out.series, SplitScheme::fractional(0.7, 0.15, 0.15));
  return out;
}

}  // namespace

TEST_CASE("training decreases the loss and is reproducible") {
  const ToyData data = toy_data(80, 4, 5, 9);
  TrainingData td{data.windows, data.series, {}, data.split.train, data.split.val};
  const ModelSpec spec = toy_spec(4, 5);
  REQUIRE(data.windows.samples_targeting(data.split.train).size() >= 50);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.max_epochs = 10;
  cfg.patience = 100;
  cfg.seed = 3;
  cfg.loss.delta = 1e4;
  const TrainResult a = train(spec, td, cfg);
  REQUIRE(a.history.size() == 10);
  int upticks = 0;
  for (size_t e = 1; e < a.history.size(); ++e)
    if (a.history[e].train_loss > a.history[e - 1].train_loss) ++upticks;
  CHECK(upticks <= 1);
  CHECK(a.history.back().train_loss < a.history.front().train_loss);

  const TrainResult b = train(spec, td, cfg);
  cfg.threads = 3;
  const TrainResult c = train(spec, td, cfg);
  for (size_t e = 0; e < a.history.size(); ++e) {
    CHECK(a.history[e].train_loss == b.history[e].train_loss);
    CHECK(a.history[e].val_rmse == b.history[e].val_rmse);
    CHECK(a.history[e].train_loss == c.history[e].train_loss);
  }
  CHECK(a.best.values == c.best.values);
  double best = 1e300;
  for (const auto& r : a.history) best = std::min(best, r.val_rmse);
  CHECK(a.best_val_rmse == best);
}

TEST_CASE("a constant series is learnable") {
  MatrixXd sigma(3, 3);
  sigma << 2.0, 0.5, 0.2, 0.5, 1.0, 0.3, 0.2, 0.3, 1.5;
  const RCovSeries series(std::vector<SpdMatrixd>(60, SpdMatrixd(sigma)));
  const WindowSet windows = make_windows(series, {}, 3);
  const SeriesSplit split = split_series(series, SplitScheme::fractional(0.7, 0.15, 0.15));
  TrainingData td{windows, series, {}, split.train, split.val};
  TrainConfig cfg;
  cfg.adam.lr = 1e-2;
  cfg.batch_size = 16;
  cfg.max_epochs = 600;
  cfg.patience = 600;
  cfg.l1_lambda = 0.0;
  cfg.seed = 1;
  const TrainResult r = train(toy_spec(3, 3), td, cfg);
  CHECK(r.best_val_rmse < 1e-2 * sigma.norm());
}

TEST_CASE("training rejects empty splits") {
  const ToyData data = toy_data(40, 4, 5, 2);
  TrainingData td{data.windows, data.series, {}, Range{0, 4}, data.split.val};
  CHECK_THROWS_AS(train(toy_spec(4, 5), td, {}), EmptySplit);
  TrainConfig bad;
  bad.adam.beta1 = 1.0;
  TrainingData ok{data.windows, data.series, {}, data.split.train, data.split.val};
  CHECK_THROWS_AS(train(toy_spec(4, 5), ok, bad), ConfigError);
}
