#pragma once

#include <string>
#include <string_view>
#include <span>
#include <vector>

#include "rcov/series.hpp"

namespace rcov {

/// SPD-preserving preprocessing applied to every matrix before it reaches
/// the network. The network output is mapped back by `inverse_transform`.
enum class TransformKind { None, Cholesky, Sqrt, SqrtThenCholesky };

struct TransformSpec {
  TransformKind kind = TransformKind::SqrtThenCholesky;
};

std::string to_string(TransformKind kind);
TransformKind parse_transform(std::string_view name);
inline constexpr TransformKind kAllTransforms[] = {TransformKind::None, TransformKind::Cholesky,
                                                   TransformKind::Sqrt,
                                                   TransformKind::SqrtThenCholesky};

/// None: identity. Cholesky: lower factor L with L L^T = S. Sqrt: S^{1/2}.
/// SqrtThenCholesky: Cholesky factor of S^{1/2}.
MatrixXd forward_transform(const SpdMatrixd& sigma, TransformSpec spec);

/// Maps an arbitrary d x d network output back to a symmetric matrix. Every
/// kind except None yields a PSD result: triangular kinds keep only the lower
/// triangle (the upper cells are discarded), Sqrt symmetrizes before squaring.
SymMatrixd inverse_transform(const MatrixXd& out, TransformSpec spec);

/// One training example: input[k] is the transformed matrix k days before the
/// forecast origin (most recent first), target is the transformed next day.
struct LagWindowSample {
  std::vector<MatrixXd> input;
  MatrixXd target;
  Index target_index = 0;
};

/// All lag windows over a series, stored once as transformed matrices.
/// Sample i has its target at day `lag + i` and inputs at days
/// `lag + i - 1` down to `i`.
class WindowSet {
 public:
  WindowSet() = default;
  WindowSet(std::vector<MatrixXd> transformed, Index lag);

  Index lag() const { return lag_; }
  Index dim() const { return transformed_.empty() ? 0 : transformed_.front().rows(); }
  Index size() const { return static_cast<Index>(transformed_.size()) - lag_; }

  /// Day index of the forecast target of sample i.
  Index target_index(Index i) const { return lag_ + i; }
  /// Transformed matrix of day t.
  const MatrixXd& day(Index t) const { return transformed_[static_cast<size_t>(t)]; }
  /// Input slice k (k = 0 is the most recent day) of sample i.
  const MatrixXd& input(Index i, Index k) const { return day(lag_ + i - 1 - k); }
  const MatrixXd& target(Index i) const { return day(lag_ + i); }
  /// Inputs of sample i in chronological order (oldest first).
  std::span<const MatrixXd> window(Index i) const {
    return std::span<const MatrixXd>(transformed_).subspan(static_cast<size_t>(i),
                                                           static_cast<size_t>(lag_));
  }

  LagWindowSample sample(Index i) const;
  /// Sample indices whose target day lies in `days`.
  std::vector<Index> samples_targeting(Range days) const;

 private:
  std::vector<MatrixXd> transformed_;
  Index lag_ = 0;
};

/// Builds the T - m lag windows. Throws SeriesTooShort unless T > m.
WindowSet make_windows(const RCovSeries& series, TransformSpec spec, Index lag);

struct SplitScheme {
  enum class Kind { Fractional, TrailingDays } kind = Kind::Fractional;
  double train_frac = 0.7, val_frac = 0.1, test_frac = 0.2;
  Index val_days = 252, test_days = 252;

  static SplitScheme fractional(double train, double val, double test) {
    return {Kind::Fractional, train, val, test, 0, 0};
  }
  static SplitScheme trailing(Index val_days, Index test_days) {
    return {Kind::TrailingDays, 0, 0, 0, val_days, test_days};
  }
};

struct SeriesSplit {
  Range train, val, test;
};

/// Chronological, contiguous, disjoint split covering [0, T). Throws
/// SeriesTooShort when the training part would hold fewer than `min_train`
/// days or any part would be empty.
SeriesSplit split_series(Index length, const SplitScheme& scheme, Index min_train = 1);
inline SeriesSplit split_series(const RCovSeries& series, const SplitScheme& scheme,
                                Index min_train = 1) {
  return split_series(series.size(), scheme, min_train);
}

}  // namespace rcov
