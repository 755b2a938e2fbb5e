#pragma once

#include <Eigen/Dense>

#include <string>

#include "rcov/errors.hpp"

namespace rcov {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Square matrix that is exactly symmetric. Construction replaces the input
/// with (M + M^T) / 2, which absorbs accumulated rounding asymmetry.
template <typename Scalar>
class SymMatrix {
 public:
  using Matrix = MatrixX<Scalar>;

  SymMatrix() = default;

  template <typename Derived>
  SymMatrix(const Eigen::MatrixBase<Derived>& m) {  // NOLINT: implicit on purpose
    if (m.rows() != m.cols() || m.rows() < 1) {
      throw DimensionMismatch("symmetric matrix must be square and non-empty, got " +
                              std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    data_ = Scalar(0.5) * (m + m.transpose());
  }

  static SymMatrix identity(Index d) { return SymMatrix(Matrix::Identity(d, d)); }

  Index dim() const { return data_.rows(); }
  const Matrix& matrix() const { return data_; }
  operator const Matrix&() const { return data_; }  // NOLINT
  Scalar operator()(Index i, Index j) const { return data_(i, j); }

 private:
  Matrix data_;
};

/// Lower-triangular factor; the strict upper triangle is zero.
template <typename Scalar>
class LowerTriangular {
 public:
  using Matrix = MatrixX<Scalar>;

  LowerTriangular() = default;

  /// Keeps only the lower triangle (including the diagonal) of `m`.
  template <typename Derived>
  explicit LowerTriangular(const Eigen::MatrixBase<Derived>& m)
      : data_(m.template triangularView<Eigen::Lower>()) {
    if (m.rows() != m.cols()) throw DimensionMismatch("triangular factor must be square");
  }

  Index dim() const { return data_.rows(); }
  const Matrix& matrix() const { return data_; }
  operator const Matrix&() const { return data_; }  // NOLINT
  Scalar operator()(Index i, Index j) const { return data_(i, j); }

  /// L * L^T.
  SymMatrix<Scalar> gram() const { return SymMatrix<Scalar>(data_ * data_.transpose()); }

 private:
  Matrix data_;
};

/// Eigenvalues sorted descending with matching orthonormal eigenvector columns.
template <typename Scalar>
struct EigenPair {
  VectorX<Scalar> values;
  MatrixX<Scalar> vectors;
};

using SymMatrixd = SymMatrix<double>;
using LowerTriangulard = LowerTriangular<double>;
using EigenPaird = EigenPair<double>;

}  // namespace rcov
