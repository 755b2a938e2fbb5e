#include "rcov/nn/layers.hpp"

#include "rcov/errors.hpp"

namespace rcov::nn {

MatrixXd FeatureMap::channel(Index c) const {
  MatrixXd m(height, width);
  for (Index y = 0; y < height; ++y)
    for (Index x = 0; x < width; ++x) m(y, x) = data(c, y * width + x);
  return m;
}

FeatureMap FeatureMap::from_matrix(const MatrixXd& m) {
  FeatureMap f{MatrixXd(1, m.size()), m.rows(), m.cols()};
  for (Index y = 0; y < m.rows(); ++y)
    for (Index x = 0; x < m.cols(); ++x) f.data(0, y * m.cols() + x) = m(y, x);
  return f;
}

void im2col(const MatrixXd& x, Index height, Index width, Index kh, Index kw, MatrixXd& cols) {
  const Index channels = x.rows(), ph = kh / 2, pw = kw / 2;
  cols.setZero(channels * kh * kw, height * width);
  for (Index c = 0; c < channels; ++c)
    for (Index ky = 0; ky < kh; ++ky)
      for (Index kx = 0; kx < kw; ++kx) {
        const Index row = (c * kh + ky) * kw + kx;
        const Index dy = ky - ph, dx = kx - pw;
        for (Index y = std::max<Index>(0, -dy); y < std::min(height, height - dy); ++y)
          for (Index xx = std::max<Index>(0, -dx); xx < std::min(width, width - dx); ++xx)
            cols(row, y * width + xx) = x(c, (y + dy) * width + xx + dx);
      }
}

void col2im_add(const MatrixXd& cols, Index height, Index width, Index kh, Index kw, MatrixXd& x) {
  const Index channels = x.rows(), ph = kh / 2, pw = kw / 2;
  for (Index c = 0; c < channels; ++c)
    for (Index ky = 0; ky < kh; ++ky)
      for (Index kx = 0; kx < kw; ++kx) {
        const Index row = (c * kh + ky) * kw + kx;
        const Index dy = ky - ph, dx = kx - pw;
        for (Index y = std::max<Index>(0, -dy); y < std::min(height, height - dy); ++y)
          for (Index xx = std::max<Index>(0, -dx); xx < std::min(width, width - dx); ++xx)
            x(c, (y + dy) * width + xx + dx) += cols(row, y * width + xx);
      }
}

FeatureMap conv2d_same(const FeatureMap& x, const Eigen::Ref<const MatrixXd>& kernel, Index kh,
                       Index kw, const Eigen::Ref<const VectorXd>& bias) {
  if (kh % 2 == 0 || kw % 2 == 0) throw ShapeMismatch("kernel sizes must be odd");
  if (kernel.cols() != x.channels() * kh * kw)
    throw ShapeMismatch("kernel has " + std::to_string(kernel.cols()) + " columns, expected " +
                        std::to_string(x.channels() * kh * kw));
  if (bias.size() != 0 && bias.size() != kernel.rows()) throw ShapeMismatch("bias length");
  if (x.data.cols() != x.height * x.width) throw ShapeMismatch("feature map size");
  MatrixXd cols;
  im2col(x.data, x.height, x.width, kh, kw, cols);
  FeatureMap out{kernel * cols, x.height, x.width};
  if (bias.size()) out.data.colwise() += bias;
  return out;
}

LstmState convlstm_step(const MatrixXd& x, const LstmState& prev, const LstmWeights& w,
                        Index height, Index width, LstmStepCache* cache) {
  const Index hidden = w.kernel.rows() / 4, cells = height * width;
  if (w.kernel.rows() != 4 * hidden || prev.h.rows() != hidden || prev.c.rows() != hidden ||
      prev.h.cols() != cells || prev.c.cols() != cells || x.cols() != cells ||
      w.kernel.cols() != (x.rows() + hidden) * w.kh * w.kw ||
      (w.bias.size() != 0 && w.bias.size() != 4 * hidden) ||
      (w.peephole.size() != 0 && (w.peephole.rows() != 3 * hidden || w.peephole.cols() != cells)))
    throw ShapeMismatch("convlstm step dimensions");

  MatrixXd z(x.rows() + hidden, cells);
  z << x, prev.h;
  LstmStepCache local;
  LstmStepCache& k = cache ? *cache : local;
  im2col(z, height, width, w.kh, w.kw, k.cols);
  MatrixXd pre = w.kernel * k.cols;
  if (w.bias.size()) pre.colwise() += w.bias;
  const bool peep = w.peephole.size() != 0;
  if (peep) {
    pre.topRows(hidden).array() += w.peephole.topRows(hidden).array() * prev.c.array();
    pre.middleRows(hidden, hidden).array() +=
        w.peephole.middleRows(hidden, hidden).array() * prev.c.array();
  }
  auto sig = [](const auto& m) { return MatrixXd(m.unaryExpr([](double v) { return sigmoid(v); })); };
  k.in_gate = sig(pre.topRows(hidden));
  k.forget_gate = sig(pre.middleRows(hidden, hidden));
  k.candidate = pre.middleRows(2 * hidden, hidden).array().tanh();
  k.c_prev = prev.c;
  k.c = k.forget_gate.cwiseProduct(prev.c) + k.in_gate.cwiseProduct(k.candidate);
  if (peep) pre.bottomRows(hidden).array() += w.peephole.bottomRows(hidden).array() * k.c.array();
  k.out_gate = sig(pre.bottomRows(hidden));
  k.tanh_c = k.c.array().tanh();
  return {k.out_gate.cwiseProduct(k.tanh_c), k.c};
}

}  // namespace rcov::nn
