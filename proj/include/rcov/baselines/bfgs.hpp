#pragma once

#include <cmath>
#include <functional>
#include <limits>

#include "rcov/linalg/types.hpp"

namespace rcov {

struct BfgsOptions {
  double grad_tol = 1e-5;   // stop when the gradient infinity norm falls below this
  int max_iterations = 500;
  double fd_rel_step = 1e-6;  // central difference step h = fd_rel_step * (1 + |x|)
  double armijo = 1e-4;
  int max_backtracks = 60;
};

struct BfgsResult {
  VectorXd x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

using Objective = std::function<double(const VectorXd&)>;

/// Central finite-difference gradient. Falls back to a one-sided difference
/// when one of the probes is not finite.
inline VectorXd fd_gradient(const Objective& f, const VectorXd& x, double fx, double rel_step) {
  VectorXd g(x.size());
  VectorXd probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * (1.0 + std::abs(x(i)));
    probe(i) = x(i) + h;
    const double fp = f(probe);
    probe(i) = x(i) - h;
    const double fm = f(probe);
    probe(i) = x(i);
    if (std::isfinite(fp) && std::isfinite(fm)) {
      g(i) = (fp - fm) / (2.0 * h);
    } else if (std::isfinite(fp)) {
      g(i) = (fp - fx) / h;
    } else if (std::isfinite(fm)) {
      g(i) = (fx - fm) / h;
    } else {
      g(i) = 0.0;
    }
  }
  return g;
}

/// Minimizes `f` with BFGS (inverse-Hessian update) and a backtracking Armijo
/// line search; gradients come from central finite differences. Non-finite
/// objective values are treated as +infinity by the line search.
inline BfgsResult minimize_bfgs(const Objective& f, VectorXd x0, const BfgsOptions& opts = {}) {
  const Index n = x0.size();
  BfgsResult res;
  res.x = std::move(x0);
  res.value = f(res.x);
  if (!std::isfinite(res.value)) return res;

  VectorXd g = fd_gradient(f, res.x, res.value, opts.fd_rel_step);
  MatrixXd h_inv = MatrixXd::Identity(n, n);
  res.grad_norm = g.lpNorm<Eigen::Infinity>();

  for (; res.iterations < opts.max_iterations; ++res.iterations) {
    if (res.grad_norm < opts.grad_tol) {
      res.converged = true;
      break;
    }
    VectorXd dir = -h_inv * g;
    if (g.dot(dir) >= 0.0) {  // lost descent direction: restart from steepest descent
      h_inv.setIdentity();
      dir = -g;
    }
    const double slope = g.dot(dir);
    double step = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    VectorXd x_new;
    bool accepted = false;
    for (int bt = 0; bt < opts.max_backtracks; ++bt) {
      x_new = res.x + step * dir;
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new <= res.value + opts.armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (h_inv.isIdentity()) break;  // no progress possible along the gradient either
      h_inv.setIdentity();
      continue;
    }

    const VectorXd g_new = fd_gradient(f, x_new, f_new, opts.fd_rel_step);
    const VectorXd s = x_new - res.x;
    const VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const MatrixXd eye = MatrixXd::Identity(n, n);
      h_inv = (eye - rho * s * y.transpose()) * h_inv * (eye - rho * y * s.transpose()) +
              rho * s * s.transpose();
    }
    res.x = x_new;
    res.value = f_new;
    g = g_new;
    res.grad_norm = g.lpNorm<Eigen::Infinity>();
  }
  if (res.grad_norm < opts.grad_tol) res.converged = true;
  return res;
}

}  // namespace rcov
