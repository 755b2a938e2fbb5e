#pragma once

#include <cstdint>
#include <random>

#include "rcov/linalg/decompositions.hpp"

namespace rcov {

/// Seeded random stream. Not shareable across threads; give each thread its
/// own instance. Identical seeds give bit-identical streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(engine_); }
  /// Chi-square draw; the underlying gamma sampler is Marsaglia-Tsang.
  double chi_squared(double k) { return std::chi_squared_distribution<double>(k)(engine_); }
  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

  template <typename Scalar = double>
  MatrixX<Scalar> normal_matrix(Index rows, Index cols) {
    MatrixX<Scalar> m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = static_cast<Scalar>(normal());
    return m;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Bartlett factor A: lower triangular with sqrt(chi2(df - i)) on the diagonal
/// and standard normals below it, so that A A^T ~ Wishart(df, I).
template <typename Scalar = double>
MatrixX<Scalar> bartlett_factor(double df, Index d, Rng& rng) {
  MatrixX<Scalar> a = MatrixX<Scalar>::Zero(d, d);
  for (Index i = 0; i < d; ++i) {
    a(i, i) = static_cast<Scalar>(std::sqrt(rng.chi_squared(df - static_cast<double>(i))));
    for (Index j = 0; j < i; ++j) a(i, j) = static_cast<Scalar>(rng.normal());
  }
  return a;
}

/// Draw from Wishart(df, scale); E[draw] = df * scale. Real df > d - 1.
template <typename Scalar>
SpdMatrix<Scalar> sample_wishart(double df, const SpdMatrix<Scalar>& scale, Rng& rng) {
  const Index d = scale.dim();
  if (!(df > static_cast<double>(d) - 1.0)) {
    throw InvalidDegreesOfFreedom("Wishart df " + std::to_string(df) + " must exceed d - 1 = " +
                                  std::to_string(d - 1));
  }
  const MatrixX<Scalar> la = cholesky(scale).matrix() * bartlett_factor<Scalar>(df, d, rng);
  return SpdMatrix<Scalar>(la * la.transpose());
}

/// Matrix-F draw with mean `s`:
/// ((nu2 - d - 1) / nu1) s^{1/2} W1^{1/2} W2^{-1} W1^{1/2} s^{1/2},
/// W1 ~ Wishart(nu1, I), W2 ~ Wishart(nu2, I) independent.
template <typename Scalar>
SpdMatrix<Scalar> sample_matrix_f(double nu1, double nu2, const SpdMatrix<Scalar>& s, Rng& rng) {
  const Index d = s.dim();
  const double dd = static_cast<double>(d);
  if (!(nu1 > dd - 1.0)) {
    throw InvalidDegreesOfFreedom("matrix-F nu1 " + std::to_string(nu1) + " must exceed d - 1");
  }
  if (!(nu2 > dd + 1.0)) {
    throw InvalidDegreesOfFreedom("matrix-F nu2 " + std::to_string(nu2) +
                                  " must exceed d + 1 for the mean to exist");
  }
  const auto ident = SpdMatrix<Scalar>::identity(d);
  const SpdMatrix<Scalar> w1 = sample_wishart(nu1, ident, rng);
  const SpdMatrix<Scalar> w2 = sample_wishart(nu2, ident, rng);

  const MatrixX<Scalar> w1_half = spd_sqrt(w1).matrix();
  const MatrixX<Scalar> s_half = spd_sqrt(s).matrix();
  const MatrixX<Scalar> inner = w1_half * w2.matrix().llt().solve(w1_half);
  const Scalar c = static_cast<Scalar>((nu2 - dd - 1.0) / nu1);
  return SpdMatrix<Scalar>(c * s_half * inner * s_half);
}

/// d x r matrix with orthonormal columns (QR of a Gaussian matrix, signs fixed
/// so the R diagonal is positive).
template <typename Scalar = double>
MatrixX<Scalar> random_orthonormal(Index d, Index r, Rng& rng) {
  const MatrixX<Scalar> g = rng.normal_matrix<Scalar>(d, r);
  Eigen::HouseholderQR<MatrixX<Scalar>> qr(g);
  MatrixX<Scalar> q = qr.householderQ() * MatrixX<Scalar>::Identity(d, r);
  const MatrixX<Scalar> rr = qr.matrixQR().topRows(r).template triangularView<Eigen::Upper>();
  for (Index k = 0; k < r; ++k)
    if (rr(k, k) < 0) q.col(k) *= Scalar(-1);
  return q;
}

}  // namespace rcov
