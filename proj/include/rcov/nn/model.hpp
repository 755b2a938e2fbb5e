#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rcov/linalg/types.hpp"

namespace rcov::nn {

enum class LayerKind { ConvLstm, ConvLRelu, ConvLinear };

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view name);

struct LayerSpec {
  LayerKind kind = LayerKind::ConvLRelu;
  Index in_channels = 1;
  Index out_channels = 1;
  Index kh = 3, kw = 3;
  bool use_bias = true;
  bool peephole = false;  // ConvLstm only

  bool has_activation() const { return kind != LayerKind::ConvLinear; }
};

struct ModelSpec {
  Index lag = 20;
  Index dim = 0;
  std::vector<LayerSpec> layers;
  double lrelu_slope = 0.01;

  /// Throws ConfigError unless the first layer is the only ConvLstm, the last
  /// is a single-channel ConvLinear, channels chain, and kernels are odd.
  void validate() const;
  Index cells() const { return dim * dim; }

  /// ConvLSTM(1->8, 3x3), Conv(8->16, 3x3), linear Conv(16->1, 1x1).
  static ModelSpec simulation(Index dim, Index lag = 20);
  /// ConvLSTM(1->4, 3x3), Conv(4->8, 3x3), linear Conv(8->1, 1x1).
  static ModelSpec djia(Index dim = 25, Index lag = 20);
  /// ConvLSTM(1->16, 5x5), Conv(16->16, 3x3), Conv(16->32, 3x3), linear Conv(32->1, 5x5).
  static ModelSpec sp100(Index dim = 60, Index lag = 20);
  static ModelSpec preset(std::string_view name, Index dim, Index lag = 20);

  /// Compact text form "kind:in:out:kh[xkw][:nobias][:peephole]" joined by ','.
  std::string layers_string() const;
  static std::vector<LayerSpec> parse_layers(std::string_view text);
};

struct ParamCount {
  Index weights_only = 0;  // kernels
  Index total = 0;         // kernels, biases and peepholes
};

ParamCount count_params(const ModelSpec& spec);

/// Offsets of one layer's blocks inside the flat parameter vector. Kernels are
/// stored column-major as out_rows x (in_channels * kh * kw); the ConvLstm
/// kernel stacks the four gates (input, forget, candidate, output) by rows
/// and concatenates input and hidden channels by columns.
struct LayerBlocks {
  Index kernel = 0, kernel_rows = 0, kernel_cols = 0;
  Index bias = 0, bias_size = 0;
  Index peephole = 0, peephole_rows = 0, peephole_cols = 0;
};

class ModelLayout {
 public:
  ModelLayout() = default;
  explicit ModelLayout(const ModelSpec& spec);

  Index size() const { return size_; }
  const LayerBlocks& blocks(size_t layer) const { return blocks_[layer]; }
  size_t layer_count() const { return blocks_.size(); }

  template <typename P>
  auto kernel(P* base, size_t l) const {
    const auto& b = blocks_[l];
    return Eigen::Map<std::conditional_t<std::is_const_v<P>, const MatrixXd, MatrixXd>>(
        base + b.kernel, b.kernel_rows, b.kernel_cols);
  }
  template <typename P>
  auto bias(P* base, size_t l) const {
    const auto& b = blocks_[l];
    return Eigen::Map<std::conditional_t<std::is_const_v<P>, const VectorXd, VectorXd>>(
        base + b.bias, b.bias_size);
  }
  template <typename P>
  auto peephole(P* base, size_t l) const {
    const auto& b = blocks_[l];
    return Eigen::Map<std::conditional_t<std::is_const_v<P>, const MatrixXd, MatrixXd>>(
        base + b.peephole, b.peephole_rows, b.peephole_cols);
  }

  /// 1 for kernel entries, 0 for biases and peepholes.
  VectorXd kernel_mask() const;

 private:
  std::vector<LayerBlocks> blocks_;
  Index size_ = 0;
};

/// Flat trainable parameter store with per-layer views.
struct ModelWeights {
  ModelSpec spec;
  ModelLayout layout;
  VectorXd values;

  ModelWeights() = default;
  /// Zero-initialized weights for `spec`.
  explicit ModelWeights(ModelSpec s);

  auto kernel(size_t l) const { return layout.kernel(values.data(), l); }
  auto bias(size_t l) const { return layout.bias(values.data(), l); }
  auto peephole(size_t l) const { return layout.peephole(values.data(), l); }
  auto kernel(size_t l) { return layout.kernel(values.data(), l); }
  auto bias(size_t l) { return layout.bias(values.data(), l); }
  auto peephole(size_t l) { return layout.peephole(values.data(), l); }
};

/// Uniform(+-sqrt(6 / fan_in)) kernels, zero biases except forget-gate
/// biases of 1, zero peepholes.
ModelWeights init_weights(const ModelSpec& spec, std::uint64_t seed);

/// FNV-1a digest of the canonical spec text.
std::uint64_t spec_digest(const ModelSpec& spec);

/// Binary checkpoint: 8-byte tag, LE digest, LE count, LE float64 values.
/// Written atomically.
void save_checkpoint(const std::string& path, const ModelWeights& weights);
/// Throws DataError on a bad tag, digest mismatch or truncated file.
ModelWeights load_checkpoint(const std::string& path, const ModelSpec& spec);

}  // namespace rcov::nn
