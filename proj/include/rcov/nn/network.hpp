#pragma once

#include <span>
#include <vector>

#include "rcov/nn/layers.hpp"
#include "rcov/nn/model.hpp"

namespace rcov::nn {

/// Per-layer values of one forward pass. Layer 0 is the ConvLstm, whose
/// `pre` is its final hidden state.
struct ForwardCache {
  std::vector<LstmStepCache> steps;
  std::vector<MatrixXd> cols;  // im2col of each conv layer's input (empty for layer 0)
  std::vector<MatrixXd> pre;   // before activation
  std::vector<MatrixXd> post;  // after activation
};

/// Runs the window (chronological, each dim x dim) through the network and
/// returns the dim x dim output map. Throws ShapeMismatch.
MatrixXd forward(const ModelWeights& weights, std::span<const MatrixXd> window,
                 ForwardCache* cache = nullptr);

/// Adds d(output-based loss)/d(parameters) to `grad`, given d loss / d output.
void backward(const ModelWeights& weights, const ForwardCache& cache, const MatrixXd& d_output,
              VectorXd& grad);

/// Output feature maps of every layer (after activation) for one window.
std::vector<FeatureMap> layer_outputs(const ModelWeights& weights, std::span<const MatrixXd> window);

}  // namespace rcov::nn
