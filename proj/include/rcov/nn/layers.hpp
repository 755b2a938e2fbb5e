#pragma once

#include "rcov/linalg/types.hpp"

namespace rcov::nn {

/// Channels x (height * width) feature maps; spatial index is y * width + x.
struct FeatureMap {
  MatrixXd data;
  Index height = 0, width = 0;

  Index channels() const { return data.rows(); }
  /// Channel `c` as a height x width matrix.
  MatrixXd channel(Index c) const;
  static FeatureMap from_matrix(const MatrixXd& m);
};

/// Patch matrix for a same-padded kh x kw convolution: row
/// (c * kh + ky) * kw + kx, column p holds x(c, p shifted by (ky, kx)) or 0
/// outside the image.
void im2col(const MatrixXd& x, Index height, Index width, Index kh, Index kw, MatrixXd& cols);
/// Adjoint of im2col; accumulates into `x` (channels x height*width).
void col2im_add(const MatrixXd& cols, Index height, Index width, Index kh, Index kw, MatrixXd& x);

/// Same-padded cross-correlation. `kernel` is out x (in * kh * kw); `bias`
/// is empty or has `out` entries. Throws ShapeMismatch.
FeatureMap conv2d_same(const FeatureMap& x, const Eigen::Ref<const MatrixXd>& kernel, Index kh,
                       Index kw, const Eigen::Ref<const VectorXd>& bias);

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

struct LstmState {
  MatrixXd h, c;  // hidden x cells
};

/// Intermediate values of one ConvLstm step, kept for the backward pass.
struct LstmStepCache {
  MatrixXd cols;  // im2col of [x; h_prev]
  MatrixXd in_gate, forget_gate, candidate, out_gate;
  MatrixXd c_prev, c, tanh_c;
};

/// Weights of a ConvLstm layer: kernel is 4H x ((in + H) * kh * kw) with gate
/// row blocks input, forget, candidate, output; bias empty or 4H; peephole
/// empty or 3H x cells (input, forget, output).
struct LstmWeights {
  Eigen::Ref<const MatrixXd> kernel;
  Eigen::Ref<const VectorXd> bias;
  Eigen::Ref<const MatrixXd> peephole;
  Index kh, kw;
};

/// One ConvLstm step on input x (in x cells). Throws ShapeMismatch.
LstmState convlstm_step(const MatrixXd& x, const LstmState& prev, const LstmWeights& w,
                        Index height, Index width, LstmStepCache* cache = nullptr);

}  // namespace rcov::nn
