#include "rcov/nn/network.hpp"

#include "rcov/errors.hpp"

namespace rcov::nn {

namespace {

void lrelu_inplace(MatrixXd& m, double slope) {
  m = m.unaryExpr([slope](double v) { return v >= 0.0 ? v : slope * v; });
}

MatrixXd lrelu_grad(const MatrixXd& pre, const MatrixXd& upstream, double slope) {
  return upstream.binaryExpr(pre, [slope](double g, double v) { return v >= 0.0 ? g : slope * g; });
}

LstmWeights lstm_view(const ModelWeights& w) {
  return {w.kernel(0), w.bias(0), w.peephole(0), w.spec.layers[0].kh, w.spec.layers[0].kw};
}

}  // namespace

MatrixXd forward(const ModelWeights& weights, std::span<const MatrixXd> window, ForwardCache* cache) {
  const ModelSpec& spec = weights.spec;
  const Index d = spec.dim, cells = spec.cells();
  if (static_cast<Index>(window.size()) != spec.lag)
    throw ShapeMismatch("window has " + std::to_string(window.size()) + " steps, model expects " +
                        std::to_string(spec.lag));
  for (const auto& m : window)
    if (m.rows() != d || m.cols() != d) throw ShapeMismatch("window matrix is not " + std::to_string(d) + "x" + std::to_string(d));

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  const size_t n_layers = spec.layers.size();
  c.steps.assign(cache ? window.size() : 0, {});
  c.cols.assign(n_layers, {});
  c.pre.assign(n_layers, {});
  c.post.assign(n_layers, {});

  const Index hidden = spec.layers[0].out_channels;
  LstmState state{MatrixXd::Zero(hidden, cells), MatrixXd::Zero(hidden, cells)};
  const LstmWeights lw = lstm_view(weights);
  LstmStepCache scratch;
  for (size_t t = 0; t < window.size(); ++t) {
    const FeatureMap x = FeatureMap::from_matrix(window[t]);
    state = convlstm_step(x.data, state, lw, d, d, cache ? &c.steps[t] : &scratch);
  }
  c.pre[0] = std::move(state.h);
  c.post[0] = c.pre[0];
  lrelu_inplace(c.post[0], spec.lrelu_slope);

  for (size_t l = 1; l < n_layers; ++l) {
    const auto& s = spec.layers[l];
    im2col(c.post[l - 1], d, d, s.kh, s.kw, c.cols[l]);
    c.pre[l] = weights.kernel(l) * c.cols[l];
    if (s.use_bias) c.pre[l].colwise() += weights.bias(l);
    c.post[l] = c.pre[l];
    if (s.has_activation()) lrelu_inplace(c.post[l], spec.lrelu_slope);
  }
  return FeatureMap{c.post.back(), d, d}.channel(0);
}

void backward(const ModelWeights& weights, const ForwardCache& c, const MatrixXd& d_output,
              VectorXd& grad) {
  const ModelSpec& spec = weights.spec;
  const ModelLayout& layout = weights.layout;
  const Index d = spec.dim, cells = spec.cells();
  if (grad.size() != layout.size()) throw ShapeMismatch("gradient length");
  if (c.steps.size() != static_cast<size_t>(spec.lag)) throw ShapeMismatch("forward cache lacks steps");

  MatrixXd d_post = FeatureMap::from_matrix(d_output).data;
  for (size_t l = spec.layers.size() - 1; l >= 1; --l) {
    const auto& s = spec.layers[l];
    const MatrixXd d_pre = s.has_activation() ? lrelu_grad(c.pre[l], d_post, spec.lrelu_slope) : d_post;
    layout.kernel(grad.data(), l).noalias() += d_pre * c.cols[l].transpose();
    if (s.use_bias) layout.bias(grad.data(), l) += d_pre.rowwise().sum();
    const MatrixXd d_cols = weights.kernel(l).transpose() * d_pre;
    d_post.setZero(s.in_channels, cells);
    col2im_add(d_cols, d, d, s.kh, s.kw, d_post);
  }

  // Backpropagation through time for the ConvLstm layer.
  const auto& s0 = spec.layers[0];
  const Index hidden = s0.out_channels, k2 = s0.kh * s0.kw;
  const auto kernel = weights.kernel(0);
  const auto peep = weights.peephole(0);
  const bool has_peep = s0.peephole;
  auto d_kernel = layout.kernel(grad.data(), 0);
  auto d_bias = layout.bias(grad.data(), 0);
  auto d_peep = layout.peephole(grad.data(), 0);

  MatrixXd dh = lrelu_grad(c.pre[0], d_post, spec.lrelu_slope);
  MatrixXd dc = MatrixXd::Zero(hidden, cells);
  MatrixXd d_pre(4 * hidden, cells);
  for (size_t t = c.steps.size(); t-- > 0;) {
    const LstmStepCache& k = c.steps[t];
    const auto o = k.out_gate.array(), i = k.in_gate.array(), f = k.forget_gate.array(),
               g = k.candidate.array(), tc = k.tanh_c.array();
    auto dpo = d_pre.bottomRows(hidden).array();
    dpo = dh.array() * tc * o * (1.0 - o);
    dc.array() += dh.array() * o * (1.0 - tc.square());
    if (has_peep) {
      dc.array() += peep.bottomRows(hidden).array() * dpo;
      d_peep.bottomRows(hidden).array() += dpo * k.c.array();
    }
    d_pre.topRows(hidden).array() = dc.array() * g * i * (1.0 - i);
    d_pre.middleRows(hidden, hidden).array() = dc.array() * k.c_prev.array() * f * (1.0 - f);
    d_pre.middleRows(2 * hidden, hidden).array() = dc.array() * i * (1.0 - g.square());
    MatrixXd dc_prev = dc.cwiseProduct(k.forget_gate);
    if (has_peep) {
      dc_prev.array() += peep.topRows(hidden).array() * d_pre.topRows(hidden).array() +
                         peep.middleRows(hidden, hidden).array() * d_pre.middleRows(hidden, hidden).array();
      d_peep.topRows(hidden).array() += d_pre.topRows(hidden).array() * k.c_prev.array();
      d_peep.middleRows(hidden, hidden).array() +=
          d_pre.middleRows(hidden, hidden).array() * k.c_prev.array();
    }
    d_kernel.noalias() += d_pre * k.cols.transpose();
    if (s0.use_bias) d_bias += d_pre.rowwise().sum();
    if (t == 0) break;  // initial state is fixed at zero
    const MatrixXd d_cols = kernel.rightCols(hidden * k2).transpose() * d_pre;
    dh.setZero(hidden, cells);
    col2im_add(d_cols, d, d, s0.kh, s0.kw, dh);
    dc = std::move(dc_prev);
  }
}

std::vector<FeatureMap> layer_outputs(const ModelWeights& weights, std::span<const MatrixXd> window) {
  ForwardCache c;
  forward(weights, window, &c);
  std::vector<FeatureMap> out;
  for (auto& m : c.post) out.push_back({m, weights.spec.dim, weights.spec.dim});
  return out;
}

}  // namespace rcov::nn
