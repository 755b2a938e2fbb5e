#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "rcov/linalg.hpp"

namespace rcov::test {

/// Random SPD matrix G G^T + eps I.
inline SpdMatrixd random_spd(Index d, Rng& rng, double eps = 0.1) {
  const MatrixXd g = rng.normal_matrix(d, d);
  return SpdMatrixd(MatrixXd(g * g.transpose() + eps * MatrixXd::Identity(d, d)));
}

/// max_ij |a_ij - b_ij| / sqrt(b_ii b_jj): elementwise deviation measured in
/// the natural scale of each cell of the reference matrix.
inline double max_scaled_deviation(const MatrixXd& a, const MatrixXd& b) {
  double worst = 0.0;
  for (Index i = 0; i < b.rows(); ++i)
    for (Index j = 0; j < b.cols(); ++j)
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / std::sqrt(b(i, i) * b(j, j)));
  return worst;
}

inline std::pair<double, double> mean_var(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= double(x.size());
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return {m, s / double(x.size() - 1)};
}

/// Largest principal angle (radians) between the column spaces of two
/// matrices with orthonormal columns.
inline double max_principal_angle(const MatrixXd& a, const MatrixXd& b) {
  Eigen::JacobiSVD<MatrixXd> svd(a.transpose() * b);
  const double smin = std::min(1.0, svd.singularValues().minCoeff());
  return std::acos(smin);
}

}  // namespace rcov::test
