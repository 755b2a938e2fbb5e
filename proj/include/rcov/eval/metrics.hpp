#pragma once

#include <cmath>

#include "rcov/errors.hpp"
#include "rcov/linalg/types.hpp"

namespace rcov {

/// sqrt of the summed squared cell errors.
inline double matrix_rmse(const MatrixXd& pred, const MatrixXd& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw ShapeMismatch("forecast and truth shapes differ");
  return std::sqrt((pred - truth).squaredNorm());
}

/// Sum of absolute cell errors.
inline double matrix_mae(const MatrixXd& pred, const MatrixXd& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw ShapeMismatch("forecast and truth shapes differ");
  return (pred - truth).cwiseAbs().sum();
}

}  // namespace rcov
