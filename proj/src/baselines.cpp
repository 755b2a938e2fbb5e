#include "rcov/baselines.hpp"

#include <cmath>
#include <numbers>

namespace rcov {

SpdMatrixd ma_forecast(History history, Index n) {
  if (n < 1) throw ConfigError("MA window must be at least 1");
  if (static_cast<Index>(history.size()) < n) {
    throw SeriesTooShort("MA(" + std::to_string(n) + ") needs " + std::to_string(n) +
                         " matrices, history has " + std::to_string(history.size()));
  }
  MatrixXd sum = MatrixXd::Zero(history.back().dim(), history.back().dim());
  for (size_t t = history.size() - static_cast<size_t>(n); t < history.size(); ++t)
    sum += history[t].matrix();
  return SpdMatrixd(MatrixXd(sum / double(n)));
}

SpdMatrixd ema_forecast(History history, Index n) {
  if (n < 1) throw ConfigError("EMA span must be at least 1");
  if (history.empty()) throw SeriesTooShort("EMA needs at least one matrix");
  const double alpha = 2.0 / (double(n) + 1.0);
  MatrixXd e = history.front().matrix();
  for (size_t t = 1; t < history.size(); ++t) e = alpha * history[t].matrix() + (1.0 - alpha) * e;
  return SpdMatrixd(e);
}

// ---------------------------------------------------------------------------

std::vector<SpdMatrixd> project_factors(const MfaEmbedding& emb, History history) {
  std::vector<SpdMatrixd> out;
  out.reserve(history.size());
  for (const auto& m : history) {
    if (m.dim() != emb.dim()) throw DimensionMismatch("matrix does not match the embedding");
    out.emplace_back(MatrixXd(emb.loading.transpose() * m.matrix() * emb.loading));
  }
  return out;
}

MfaFit mfa_fit(const RCovSeries& series, Index r) {
  if (series.size() < 2) throw SeriesTooShort("MFA needs at least two matrices");
  EmbeddingEstimate est = estimate_embedding(series, r);
  MfaFit fit;
  fit.embedding = std::move(est.embedding);
  fit.eigenvalues = std::move(est.eigenvalues);
  fit.degenerate = est.degenerate;
  fit.factors = project_factors(fit.embedding, series.matrices());
  return fit;
}

// ---------------------------------------------------------------------------

double VarParams::bic() const {
  return -2.0 * loglik + double(param_count()) * std::log(double(n_obs));
}

VarParams var_fit_vectors(std::span<const VectorXd> ys, Index q) {
  if (q < 1) throw ConfigError("VAR order q must be at least 1");
  if (ys.empty()) throw SeriesTooShort("VAR needs observations");
  const Index k = ys.front().size();
  const Index t_total = static_cast<Index>(ys.size());
  const Index n = t_total - q;
  if (n < k * q + 1) {
    throw SeriesTooShort("VAR(" + std::to_string(q) + ") in dimension " + std::to_string(k) +
                         " needs at least " + std::to_string(k * q + 1 + q) + " observations");
  }
  const Index cols = 1 + k * q;
  MatrixXd x(n, cols), y(n, k);
  for (Index row = 0; row < n; ++row) {
    const Index t = q + row;
    y.row(row) = ys[static_cast<size_t>(t)].transpose();
    x(row, 0) = 1.0;
    for (Index j = 1; j <= q; ++j)
      x.block(row, 1 + (j - 1) * k, 1, k) = ys[static_cast<size_t>(t - j)].transpose();
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(x);
  if (qr.rank() < cols) {
    throw SingularDesign("VAR regressor matrix has rank " + std::to_string(qr.rank()) + " < " +
                         std::to_string(cols));
  }
  const MatrixXd beta = qr.solve(y);  // cols x k

  VarParams p;
  p.q = q;
  p.n_obs = n;
  p.intercept = beta.row(0).transpose();
  for (Index j = 0; j < q; ++j) p.coef.push_back(beta.block(1 + j * k, 0, k, k).transpose());
  const MatrixXd resid = y - x * beta;
  p.residual_cov = resid.transpose() * resid / double(n);

  const Eigen::LDLT<MatrixXd> ldlt(p.residual_cov);
  double logdet = 0.0;
  for (Index i = 0; i < k; ++i)
    logdet += std::log(std::max(ldlt.vectorD()(i), std::numeric_limits<double>::min()));
  p.loglik = -0.5 * double(n) * (double(k) * std::log(2.0 * std::numbers::pi) + logdet + double(k));
  return p;
}

VarParams var_fit(History factors, Index q) {
  std::vector<VectorXd> ys;
  ys.reserve(factors.size());
  for (const auto& f : factors) ys.push_back(vech(f.sym()));
  return var_fit_vectors(ys, q);
}

VectorXd var_forecast_vector(const VarParams& params, std::span<const VectorXd> history) {
  if (static_cast<Index>(history.size()) < params.q) {
    throw SeriesTooShort("VAR forecast needs " + std::to_string(params.q) + " lags");
  }
  VectorXd out = params.intercept;
  for (Index j = 1; j <= params.q; ++j)
    out += params.coef[static_cast<size_t>(j - 1)] * history[history.size() - static_cast<size_t>(j)];
  return out;
}

SymMatrixd var_forecast(const VarParams& params, History history) {
  if (static_cast<Index>(history.size()) < params.q) {
    throw SeriesTooShort("VAR forecast needs " + std::to_string(params.q) + " lags");
  }
  std::vector<VectorXd> lags;
  for (size_t t = history.size() - static_cast<size_t>(params.q); t < history.size(); ++t)
    lags.push_back(vech(history[t].sym()));
  const VectorXd v = var_forecast_vector(params, lags);
  return unvech(v, vech_dim(v.size()));
}

// ---------------------------------------------------------------------------

namespace {

MatrixXd sample_mean(History factors) {
  MatrixXd m = MatrixXd::Zero(factors.front().dim(), factors.front().dim());
  for (const auto& f : factors) m += f.matrix();
  return m / double(factors.size());
}

double log_multigamma(double a, Index r) {
  double s = double(r) * double(r - 1) / 4.0 * std::log(std::numbers::pi);
  for (Index j = 1; j <= r; ++j) s += std::lgamma(a + (1.0 - double(j)) / 2.0);
  return s;
}

}  // namespace

std::vector<MatrixXd> caw_scale_path(const CawParams& params, History factors,
                                     const MatrixXd& init) {
  const Index h = std::max<Index>(params.order(), 1);
  const Index t_total = static_cast<Index>(factors.size());
  if (t_total < h) throw SeriesTooShort("CAW recursion needs at least max(p, q) matrices");
  const MatrixXd cc = params.intercept();
  std::vector<MatrixXd> s(static_cast<size_t>(t_total + 1));
  for (Index t = 0; t <= t_total; ++t) {
    if (t < h) {
      s[static_cast<size_t>(t)] = init;
      continue;
    }
    MatrixXd st = cc;
    for (Index i = 1; i <= params.p(); ++i) {
      const auto& b = params.b[static_cast<size_t>(i - 1)];
      st.noalias() += b * s[static_cast<size_t>(t - i)] * b.transpose();
    }
    for (Index j = 1; j <= params.q(); ++j) {
      const auto& a = params.a[static_cast<size_t>(j - 1)];
      st.noalias() += a * factors[static_cast<size_t>(t - j)].matrix() * a.transpose();
    }
    s[static_cast<size_t>(t)] = std::move(st);
  }
  return s;
}

double wishart_logpdf(const MatrixXd& x, double nu, const MatrixXd& scale) {
  const Index r = x.rows();
  const double rd = double(r);
  const Eigen::LLT<MatrixXd> lv(scale / nu);
  const Eigen::LLT<MatrixXd> lx(x);
  if (lv.info() != Eigen::Success || !std::isfinite(scale.sum())) {
    throw NonFiniteLikelihood("scale matrix is not positive definite");
  }
  if (lx.info() != Eigen::Success) throw NonFiniteLikelihood("observation is not positive definite");
  const double logdet_v = 2.0 * lv.matrixLLT().diagonal().array().log().sum();
  const double logdet_x = 2.0 * lx.matrixLLT().diagonal().array().log().sum();
  const double trace = lv.solve(x).trace();
  return 0.5 * (nu - rd - 1.0) * logdet_x - 0.5 * trace - 0.5 * nu * rd * std::log(2.0) -
         0.5 * nu * logdet_v - log_multigamma(0.5 * nu, r);
}

double dcaw_loglik(const CawParams& params, History factors, const MatrixXd& init) {
  if (factors.empty()) throw SeriesTooShort("no factor matrices");
  const Index r = factors.front().dim();
  if (!(params.nu > double(r) - 1.0)) {
    throw InvalidDegreesOfFreedom("nu " + std::to_string(params.nu) + " must exceed r - 1");
  }
  const MatrixXd start = init.size() ? init : sample_mean(factors);
  const auto s = caw_scale_path(params, factors, start);
  const Index h = std::max<Index>(params.order(), 1);
  double ll = 0.0;
  for (Index t = h; t < static_cast<Index>(factors.size()); ++t)
    ll += wishart_logpdf(factors[static_cast<size_t>(t)].matrix(), params.nu,
                         s[static_cast<size_t>(t)]);
  if (!std::isfinite(ll)) throw NonFiniteLikelihood("log-likelihood is not finite");
  return ll;
}

double DcawFit::bic() const {
  return -2.0 * loglik + double(param_count()) * std::log(double(n_obs));
}

VectorXd dcaw_pack(const CawParams& params) {
  const Index r = params.r;
  VectorXd theta(1 + r * (1 + params.p() + params.q()));
  theta(0) = std::log(params.nu - (double(r) - 1.0));
  Index k = 1;
  auto put = [&](const MatrixXd& m) {
    for (Index i = 0; i < r; ++i) theta(k++) = std::log(std::abs(m(i, i)));
  };
  put(params.c);
  for (const auto& b : params.b) put(b);
  for (const auto& a : params.a) put(a);
  return theta;
}

CawParams dcaw_unpack(const VectorXd& theta, Index r, Index p, Index q) {
  CawParams params;
  params.r = r;
  params.diagonal = true;
  params.nu = double(r) - 1.0 + std::exp(theta(0));
  Index k = 1;
  auto take = [&] {
    MatrixXd m = MatrixXd::Zero(r, r);
    for (Index i = 0; i < r; ++i) m(i, i) = std::exp(theta(k++));
    return m;
  };
  params.c = take();
  for (Index i = 0; i < p; ++i) params.b.push_back(take());
  for (Index j = 0; j < q; ++j) params.a.push_back(take());
  return params;
}

DcawFit dcaw_fit(History factors, Index p, Index q, const BfgsOptions& opts) {
  if (p < 0 || q < 1) throw ConfigError("DCAW orders need p >= 0 and q >= 1");
  if (factors.size() < 50) throw SeriesTooShort("DCAW fitting needs at least 50 matrices");
  const Index r = factors.front().dim();
  const MatrixXd init = sample_mean(factors);
  const Index h = std::max(p, q);
  const double n_eff = double(static_cast<Index>(factors.size()) - h);

  // Start: total ARCH weight 0.1, GARCH weight 0.7, intercept matching the mean.
  CawParams start;
  start.r = r;
  start.diagonal = true;
  start.nu = double(r) + 4.0;
  start.c = MatrixXd::Zero(r, r);
  for (Index i = 0; i < r; ++i) start.c(i, i) = std::sqrt(0.2 * init(i, i));
  for (Index i = 0; i < p; ++i)
    start.b.push_back(std::sqrt(0.7 / double(p)) * MatrixXd::Identity(r, r));
  for (Index j = 0; j < q; ++j)
    start.a.push_back(std::sqrt((p > 0 ? 0.1 : 0.5) / double(q)) * MatrixXd::Identity(r, r));

  const Objective objective = [&](const VectorXd& theta) {
    if (!theta.allFinite() || theta.maxCoeff() > 30.0) return std::numeric_limits<double>::infinity();
    try {
      return -dcaw_loglik(dcaw_unpack(theta, r, p, q), factors, init) / n_eff;
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const BfgsResult res = minimize_bfgs(objective, dcaw_pack(start), opts);

  DcawFit fit;
  fit.params = dcaw_unpack(res.x, r, p, q);
  fit.init = init;
  fit.loglik = -res.value * n_eff;
  fit.converged = res.converged;
  fit.iterations = res.iterations;
  fit.n_obs = static_cast<Index>(n_eff);
  return fit;
}

SpdMatrixd dcaw_forecast(const DcawFit& fit, History history) {
  if (static_cast<Index>(history.size()) < fit.params.order()) {
    throw SeriesTooShort("DCAW forecast needs max(p, q) matrices of history");
  }
  return SpdMatrixd(caw_scale_path(fit.params, history, fit.init).back());
}

}  // namespace rcov
