#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "rcov/linalg/types.hpp"

namespace rcov {

/// Relative pivot tolerance used by `cholesky` to call a matrix singular.
inline constexpr double kCholeskyPivotTol = 1e-12;

/// Lower Cholesky factor with strictly positive diagonal.
///
/// Throws NotPositiveDefinite when a pivot falls at or below
/// kCholeskyPivotTol times the largest diagonal entry.
template <typename Scalar>
LowerTriangular<Scalar> cholesky(const SymMatrix<Scalar>& m) {
  const Index d = m.dim();
  const MatrixX<Scalar>& a = m.matrix();
  const Scalar max_diag = a.diagonal().maxCoeff();
  if (!(max_diag > Scalar(0))) throw NotPositiveDefinite("non-positive diagonal");
  const Scalar tol = Scalar(kCholeskyPivotTol) * max_diag;

  MatrixX<Scalar> l = MatrixX<Scalar>::Zero(d, d);
  for (Index j = 0; j < d; ++j) {
    Scalar pivot = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(pivot > tol)) {
      throw NotPositiveDefinite("pivot " + std::to_string(static_cast<double>(pivot)) +
                                " at column " + std::to_string(j));
    }
    const Scalar ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    for (Index i = j + 1; i < d; ++i) {
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
    }
  }
  return LowerTriangular<Scalar>(l);
}

/// Symmetric positive definite matrix. The invariant is established by a
/// successful Cholesky factorization at construction.
template <typename Scalar>
class SpdMatrix {
 public:
  using Matrix = MatrixX<Scalar>;

  SpdMatrix() = default;
  explicit SpdMatrix(SymMatrix<Scalar> m) : sym_(std::move(m)) { (void)cholesky(sym_); }
  template <typename Derived>
  explicit SpdMatrix(const Eigen::MatrixBase<Derived>& m) : SpdMatrix(SymMatrix<Scalar>(m)) {}

  static SpdMatrix identity(Index d) { return SpdMatrix(Matrix::Identity(d, d)); }

  Index dim() const { return sym_.dim(); }
  const SymMatrix<Scalar>& sym() const { return sym_; }
  const Matrix& matrix() const { return sym_.matrix(); }
  operator const Matrix&() const { return sym_.matrix(); }            // NOLINT
  operator const SymMatrix<Scalar>&() const { return sym_; }          // NOLINT
  Scalar operator()(Index i, Index j) const { return sym_(i, j); }

 private:
  SymMatrix<Scalar> sym_;
};

template <typename Scalar>
LowerTriangular<Scalar> cholesky(const SpdMatrix<Scalar>& m) {
  return cholesky(m.sym());
}

/// True when `m` admits a Cholesky factorization at the library tolerance.
template <typename Scalar>
bool is_spd(const SymMatrix<Scalar>& m) {
  try {
    (void)cholesky(m);
    return true;
  } catch (const NotPositiveDefinite&) {
    return false;
  }
}

struct JacobiOptions {
  double rel_tol = 1e-12;
  int max_sweeps = 100;
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
template <typename Scalar>
EigenPair<Scalar> sym_eig(const SymMatrix<Scalar>& m, JacobiOptions opts = {}) {
  const Index d = m.dim();
  MatrixX<Scalar> a = m.matrix();
  MatrixX<Scalar> v = MatrixX<Scalar>::Identity(d, d);
  const Scalar target = Scalar(opts.rel_tol) * a.norm();

  auto off_norm = [&] {
    Scalar s = 0;
    for (Index j = 0; j < d; ++j)
      for (Index i = 0; i < d; ++i)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  bool converged = off_norm() <= target;
  for (int sweep = 0; sweep < opts.max_sweeps && !converged; ++sweep) {
    for (Index p = 0; p < d - 1; ++p) {
      for (Index q = p + 1; q < d; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        // Rotation angle that zeroes a(p, q); t is the smaller root of t^2 + 2 theta t - 1.
        const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        const Scalar t = (theta >= 0 ? Scalar(1) : Scalar(-1)) /
                         (std::abs(theta) + std::sqrt(theta * theta + Scalar(1)));
        const Scalar c = Scalar(1) / std::sqrt(t * t + Scalar(1));
        const Scalar s = t * c;

        for (Index k = 0; k < d; ++k) {
          const Scalar akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < d; ++k) {
          const Scalar apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = Scalar(0);
        for (Index k = 0; k < d; ++k) {
          const Scalar vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    converged = off_norm() <= target;
  }
  if (!converged) {
    throw NoConvergence("Jacobi eigensolver exceeded " + std::to_string(opts.max_sweeps) +
                        " sweeps");
  }

  std::vector<Index> order(static_cast<size_t>(d));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index x, Index y) { return a(x, x) > a(y, y); });

  EigenPair<Scalar> out;
  out.values.resize(d);
  out.vectors.resize(d, d);
  for (Index k = 0; k < d; ++k) {
    out.values(k) = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

/// Symmetric square root of a PSD matrix; negative eigenvalues (rounding) are
/// clamped to zero.
template <typename Scalar>
SymMatrix<Scalar> psd_sqrt(const SymMatrix<Scalar>& m) {
  const EigenPair<Scalar> e = sym_eig(m);
  const VectorX<Scalar> root = e.values.cwiseMax(Scalar(0)).cwiseSqrt();
  return SymMatrix<Scalar>(e.vectors * root.asDiagonal() * e.vectors.transpose());
}

/// Principal square root O of an SPD matrix, O * O == m.
template <typename Scalar>
SpdMatrix<Scalar> spd_sqrt(const SpdMatrix<Scalar>& m) {
  return SpdMatrix<Scalar>(psd_sqrt(m.sym()));
}

/// Half-vectorization: lower triangle stacked column by column.
template <typename Scalar>
VectorX<Scalar> vech(const SymMatrix<Scalar>& m) {
  const Index d = m.dim();
  VectorX<Scalar> v(d * (d + 1) / 2);
  Index k = 0;
  for (Index j = 0; j < d; ++j)
    for (Index i = j; i < d; ++i) v(k++) = m(i, j);
  return v;
}

template <typename Derived>
SymMatrix<typename Derived::Scalar> unvech(const Eigen::MatrixBase<Derived>& v, Index d) {
  using Scalar = typename Derived::Scalar;
  if (d < 1 || v.size() != d * (d + 1) / 2) {
    throw DimensionMismatch("vech length " + std::to_string(v.size()) +
                            " does not match dimension " + std::to_string(d));
  }
  MatrixX<Scalar> m(d, d);
  Index k = 0;
  for (Index j = 0; j < d; ++j)
    for (Index i = j; i < d; ++i) m(i, j) = m(j, i) = v(k++);
  return SymMatrix<Scalar>(m);
}

/// Dimension r such that r(r+1)/2 == k; throws when k is not triangular.
inline Index vech_dim(Index k) {
  Index r = 0;
  while (r * (r + 1) / 2 < k) ++r;
  if (r * (r + 1) / 2 != k) throw DimensionMismatch("not a vech length: " + std::to_string(k));
  return r;
}

using SpdMatrixd = SpdMatrix<double>;

}  // namespace rcov
