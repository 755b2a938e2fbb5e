#include "rcov/transforms.hpp"

#include <cmath>

namespace rcov {

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::None: return "none";
    case TransformKind::Cholesky: return "cholesky";
    case TransformKind::Sqrt: return "sqrt";
    case TransformKind::SqrtThenCholesky: return "sqrt-then-cholesky";
  }
  return "?";
}

TransformKind parse_transform(std::string_view name) {
  for (TransformKind k : kAllTransforms)
    if (to_string(k) == name) return k;
  throw ConfigError("unknown transform '" + std::string(name) +
                    "' (expected none | cholesky | sqrt | sqrt-then-cholesky)");
}

MatrixXd forward_transform(const SpdMatrixd& sigma, TransformSpec spec) {
  switch (spec.kind) {
    case TransformKind::None: return sigma.matrix();
    case TransformKind::Cholesky: return cholesky(sigma).matrix();
    case TransformKind::Sqrt: return spd_sqrt(sigma).matrix();
    case TransformKind::SqrtThenCholesky: return cholesky(spd_sqrt(sigma)).matrix();
  }
  return sigma.matrix();
}

SymMatrixd inverse_transform(const MatrixXd& out, TransformSpec spec) {
  if (out.rows() != out.cols()) throw ShapeMismatch("network output must be square");
  switch (spec.kind) {
    case TransformKind::None: return SymMatrixd(out);
    case TransformKind::Cholesky: return LowerTriangulard(out).gram();
    case TransformKind::Sqrt: {
      const SymMatrixd o(out);
      return SymMatrixd(o.matrix() * o.matrix());
    }
    case TransformKind::SqrtThenCholesky: {
      const SymMatrixd o = LowerTriangulard(out).gram();
      return SymMatrixd(o.matrix() * o.matrix());
    }
  }
  return SymMatrixd(out);
}

WindowSet::WindowSet(std::vector<MatrixXd> transformed, Index lag)
    : transformed_(std::move(transformed)), lag_(lag) {
  if (lag_ < 1) throw ConfigError("lag must be at least 1");
  if (static_cast<Index>(transformed_.size()) <= lag_) {
    throw SeriesTooShort("series of length " + std::to_string(transformed_.size()) +
                         " cannot hold a window of lag " + std::to_string(lag_) + " plus a target");
  }
}

LagWindowSample WindowSet::sample(Index i) const {
  if (i < 0 || i >= size()) throw IndexOutOfRange("window index " + std::to_string(i));
  LagWindowSample s;
  s.input.reserve(static_cast<size_t>(lag_));
  for (Index k = 0; k < lag_; ++k) s.input.push_back(input(i, k));
  s.target = target(i);
  s.target_index = target_index(i);
  return s;
}

std::vector<Index> WindowSet::samples_targeting(Range days) const {
  std::vector<Index> out;
  for (Index i = 0; i < size(); ++i)
    if (days.contains(target_index(i))) out.push_back(i);
  return out;
}

WindowSet make_windows(const RCovSeries& series, TransformSpec spec, Index lag) {
  if (series.size() <= lag) {
    throw SeriesTooShort("series of length " + std::to_string(series.size()) +
                         " needs more than " + std::to_string(lag) + " days for lag windows");
  }
  std::vector<MatrixXd> transformed;
  transformed.reserve(static_cast<size_t>(series.size()));
  for (const auto& m : series.matrices()) transformed.push_back(forward_transform(m, spec));
  return WindowSet(std::move(transformed), lag);
}

SeriesSplit split_series(Index length, const SplitScheme& scheme, Index min_train) {
  Index n_train = 0, n_val = 0;
  if (scheme.kind == SplitScheme::Kind::Fractional) {
    const double total = scheme.train_frac + scheme.val_frac + scheme.test_frac;
    if (!(scheme.train_frac > 0 && scheme.val_frac >= 0 && scheme.test_frac > 0) ||
        std::abs(total - 1.0) > 1e-9) {
      throw ConfigError("split fractions must be positive and sum to 1");
    }
    n_train = static_cast<Index>(std::llround(scheme.train_frac * double(length)));
    n_val = static_cast<Index>(std::llround(scheme.val_frac * double(length)));
  } else {
    n_val = scheme.val_days;
    n_train = length - scheme.val_days - scheme.test_days;
  }
  const Index n_test = length - n_train - n_val;
  if (n_train < std::max<Index>(min_train, 1) || n_test < 1 || n_val < 0) {
    throw SeriesTooShort("series of length " + std::to_string(length) +
                         " leaves " + std::to_string(n_train) + " training days (need " +
                         std::to_string(std::max<Index>(min_train, 1)) + ")");
  }
  return {{0, n_train}, {n_train, n_train + n_val}, {n_train + n_val, length}};
}

}  // namespace rcov
