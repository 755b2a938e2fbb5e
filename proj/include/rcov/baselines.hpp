#pragma once

#include <span>
#include <vector>

#include "rcov/baselines/bfgs.hpp"
#include "rcov/series.hpp"
#include "rcov/simulator.hpp"

namespace rcov {

using History = std::span<const SpdMatrixd>;

/// Mean of the last n matrices.
SpdMatrixd ma_forecast(History history, Index n);

/// E_t = alpha Sigma_t + (1 - alpha) E_{t-1}, alpha = 2 / (n + 1), E_1 = Sigma_1.
SpdMatrixd ema_forecast(History history, Index n);

// ---------------------------------------------------------------------------
// Matrix-factor analysis

struct MfaFit {
  MfaEmbedding embedding;
  std::vector<SpdMatrixd> factors;  // A^T Sigma(t) A
  VectorXd eigenvalues;             // of the dispersion matrix
  bool degenerate = false;
};

MfaFit mfa_fit(const RCovSeries& series, Index r);

/// A^T Sigma A for each matrix of `history`.
std::vector<SpdMatrixd> project_factors(const MfaEmbedding& emb, History history);

/// A F A^T + Sigma_0.
inline SymMatrixd compose_forecast(const MfaEmbedding& emb, const MatrixXd& factor_forecast) {
  return compose(emb, factor_forecast);
}

// ---------------------------------------------------------------------------
// VAR on half-vectorized factor matrices

struct VarParams {
  Index q = 0;
  VectorXd intercept;           // alpha_0
  std::vector<MatrixXd> coef;   // alpha_1 .. alpha_q
  MatrixXd residual_cov;
  double loglik = 0.0;          // Gaussian residual log-likelihood
  Index n_obs = 0;              // effective sample size T - q

  Index dim() const { return intercept.size(); }
  Index param_count() const { return dim() + q * dim() * dim(); }
  /// -2 loglik + param_count ln(n_obs).
  double bic() const;
};

/// OLS of y(t) on [1, y(t-1), ..., y(t-q)]. Throws ConfigError for q < 1,
/// SeriesTooShort when T - q < k q + 1, SingularDesign for a rank-deficient
/// regressor matrix.
VarParams var_fit_vectors(std::span<const VectorXd> ys, Index q);
VarParams var_fit(History factors, Index q);

/// One-step mean forecast from the last q vectors.
VectorXd var_forecast_vector(const VarParams& params, std::span<const VectorXd> history);
/// Unvech'd one-step forecast; not guaranteed to be positive definite.
SymMatrixd var_forecast(const VarParams& params, History history);

// ---------------------------------------------------------------------------
// Diagonal CAW

/// Scale path of the BEKK recursion over `factors`: entry t is S(t) for
/// t = 0..T, where the first `order` entries are `init` and entry T is the
/// one-step forecast.
std::vector<MatrixXd> caw_scale_path(const CawParams& params, History factors,
                                     const MatrixXd& init);

/// Log density of Wishart_r(nu, scale / nu) at x, fully normalized.
double wishart_logpdf(const MatrixXd& x, double nu, const MatrixXd& scale);

/// Sum over t >= order of log p(Sigma(t) | S(t)); S initialized to `init`
/// (the sample mean of `factors` when empty). Throws InvalidDegreesOfFreedom
/// for nu <= r - 1 and NonFiniteLikelihood when a scale loses definiteness.
double dcaw_loglik(const CawParams& params, History factors, const MatrixXd& init = {});

struct DcawFit {
  CawParams params;      // diagonal C, B_i, A_j
  MatrixXd init;         // recursion start used for fitting and forecasting
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  Index n_obs = 0;

  Index param_count() const { return (params.p() + params.q() + 1) * params.r + 1; }
  double bic() const;
};

/// Maximum likelihood by BFGS on log(nu - (r - 1)) and log-magnitudes of the
/// diagonal coefficients. Requires T >= 50.
DcawFit dcaw_fit(History factors, Index p, Index q, const BfgsOptions& opts = {});

/// Pack / unpack of the unconstrained parameter vector used by dcaw_fit.
VectorXd dcaw_pack(const CawParams& params);
CawParams dcaw_unpack(const VectorXd& theta, Index r, Index p, Index q);

/// S(T + 1) from the fitted recursion over the full history.
SpdMatrixd dcaw_forecast(const DcawFit& fit, History history);

}  // namespace rcov
