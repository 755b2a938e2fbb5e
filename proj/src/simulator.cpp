#include "rcov/simulator.hpp"

namespace rcov {

std::string to_string(Innovation innovation) {
  return innovation == Innovation::Wishart ? "wishart" : "matrix-f";
}

Innovation parse_innovation(std::string_view name) {
  if (name == "wishart") return Innovation::Wishart;
  if (name == "matrix-f" || name == "matrix_f" || name == "f") return Innovation::MatrixF;
  throw ConfigError("unknown innovation '" + std::string(name) + "' (expected wishart | matrix-f)");
}

void CawParams::validate(Innovation innovation) const {
  if (r < 1) throw DimensionMismatch("factor dimension must be at least 1");
  auto check = [&](const MatrixXd& m, const char* what) {
    if (m.rows() != r || m.cols() != r) {
      throw DimensionMismatch(std::string(what) + " must be " + std::to_string(r) + "x" +
                              std::to_string(r));
    }
  };
  check(c, "C");
  for (const auto& m : a) check(m, "A_j");
  for (const auto& m : b) check(m, "B_i");
  const double rd = static_cast<double>(r);
  if (innovation == Innovation::Wishart && !(nu > rd - 1.0)) {
    throw InvalidDegreesOfFreedom("nu must exceed r - 1");
  }
  if (innovation == Innovation::MatrixF && !(nu1 > rd - 1.0 && nu2 > rd + 1.0)) {
    throw InvalidDegreesOfFreedom("matrix-F needs nu1 > r - 1 and nu2 > r + 1");
  }
  (void)SpdMatrixd(intercept());
}

CawParams CawParams::reference() {
  CawParams p;
  p.r = 3;
  p.nu = 5.0;
  p.nu1 = 10.0;
  p.nu2 = 8.0;
  auto diag = [](double x, double y, double z) {
    return MatrixXd(Eigen::Vector3d(x, y, z).asDiagonal());
  };
  p.a = {diag(0.2, 0.4, 0.5), diag(0.3, 0.5, 0.2)};
  p.b = {diag(0.2, 0.5, 0.4), diag(0.3, 0.5, 0.2)};
  p.c.resize(3, 3);
  p.c << 0.5, 0.2, 0.3,  //
      0.2, 0.5, 0.25,    //
      0.3, 0.25, 0.5;
  return p;
}

SpdMatrixd bekk_step(const CawParams& params, const std::vector<SpdMatrixd>& scales,
                     const std::vector<SpdMatrixd>& realized) {
  if (static_cast<Index>(scales.size()) < params.p() ||
      static_cast<Index>(realized.size()) < params.q()) {
    throw DimensionMismatch("BEKK step needs " + std::to_string(params.p()) + " scales and " +
                            std::to_string(params.q()) + " realized matrices");
  }
  MatrixXd s = params.intercept();
  for (Index i = 0; i < params.p(); ++i) {
    const auto& bi = params.b[static_cast<size_t>(i)];
    const auto& prev = scales[static_cast<size_t>(i)];
    if (prev.dim() != params.r) throw DimensionMismatch("scale history dimension");
    s.noalias() += bi * prev.matrix() * bi.transpose();
  }
  for (Index j = 0; j < params.q(); ++j) {
    const auto& aj = params.a[static_cast<size_t>(j)];
    const auto& prev = realized[static_cast<size_t>(j)];
    if (prev.dim() != params.r) throw DimensionMismatch("realized history dimension");
    s.noalias() += aj * prev.matrix() * aj.transpose();
  }
  return SpdMatrixd(s);
}

namespace {

MatrixXd kron(const MatrixXd& x, const MatrixXd& y) {
  MatrixXd out(x.rows() * y.rows(), x.cols() * y.cols());
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.cols(); ++j)
      out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
  return out;
}

}  // namespace

SpdMatrixd stationary_mean(const CawParams& params) {
  const Index r = params.r;
  MatrixXd system = MatrixXd::Identity(r * r, r * r);
  for (const auto& bi : params.b) system -= kron(bi, bi);
  for (const auto& aj : params.a) system -= kron(aj, aj);
  const MatrixXd cc = params.intercept();
  const VectorXd vec_s =
      system.fullPivLu().solve(Eigen::Map<const VectorXd>(cc.data(), cc.size()));
  return SpdMatrixd(MatrixXd(Eigen::Map<const MatrixXd>(vec_s.data(), r, r)));
}

SpdMatrixd draw_innovation(const CawParams& params, Innovation innovation,
                           const SpdMatrixd& scale, Rng& rng) {
  if (innovation == Innovation::Wishart) {
    return sample_wishart(params.nu, SpdMatrixd(MatrixXd(scale.matrix() / params.nu)), rng);
  }
  return sample_matrix_f(params.nu1, params.nu2, scale, rng);
}

CawPath simulate_caw(const CawParams& params, const SimulationOptions& opts, Rng& rng) {
  params.validate(opts.innovation);
  const Index h = std::max<Index>(params.order(), 1);
  if (opts.length < h + 1) throw SeriesTooShort("simulation length must exceed the BEKK order");

  std::vector<SpdMatrixd> init = opts.init;
  if (init.empty()) {
    SpdMatrixd start;
    try {
      start = stationary_mean(params);
    } catch (const NotPositiveDefinite&) {
      start = SpdMatrixd(params.intercept());
    }
    init.assign(static_cast<size_t>(h), start);
  }
  if (static_cast<Index>(init.size()) != h) {
    throw DimensionMismatch("expected " + std::to_string(h) + " initial scale matrices");
  }

  const Index total = opts.burn_in + opts.length;
  std::vector<SpdMatrixd> scales, factors;
  scales.reserve(static_cast<size_t>(total));
  factors.reserve(static_cast<size_t>(total));
  std::vector<SpdMatrixd> s_hist, x_hist;  // most recent first
  for (Index t = 0; t < total; ++t) {
    SpdMatrixd s;
    if (t < h) {
      s = init[static_cast<size_t>(t)];
      if (s.dim() != params.r) throw DimensionMismatch("initial scale dimension");
    } else {
      s_hist.assign(scales.rbegin(), scales.rbegin() + params.p());
      x_hist.assign(factors.rbegin(), factors.rbegin() + params.q());
      s = bekk_step(params, s_hist, x_hist);
    }
    factors.push_back(draw_innovation(params, opts.innovation, s, rng));
    scales.push_back(std::move(s));
  }

  CawPath path;
  path.factors.assign(factors.begin() + opts.burn_in, factors.end());
  path.scales.assign(scales.begin() + opts.burn_in, scales.end());
  return path;
}

EmbeddingEstimate estimate_embedding(const RCovSeries& series, Index r) {
  const Index d = series.dim();
  if (r < 1 || r >= d) {
    throw DimensionMismatch("factor dimension " + std::to_string(r) + " must lie in [1, " +
                            std::to_string(d) + ")");
  }
  const double n = static_cast<double>(series.size());
  EmbeddingEstimate est;
  est.mean = MatrixXd::Zero(d, d);
  for (const auto& m : series.matrices()) est.mean += m.matrix();
  est.mean /= n;
  est.dispersion = MatrixXd::Zero(d, d);
  for (const auto& m : series.matrices()) {
    const MatrixXd dev = m.matrix() - est.mean;
    est.dispersion.noalias() += dev * dev;
  }
  est.dispersion /= n;

  const EigenPaird eig = sym_eig(SymMatrixd(est.dispersion));
  est.eigenvalues = eig.values;
  est.degenerate = !(eig.values(0) > 1e-12 * (1.0 + est.mean.norm() * est.mean.norm()));
  const MatrixXd loading = eig.vectors.leftCols(r);
  const MatrixXd proj = loading * loading.transpose();
  est.embedding.loading = loading;
  est.embedding.static_part = SymMatrixd(MatrixXd(est.mean - proj * est.mean * proj));
  return est;
}

MfaEmbedding make_embedding(Index d, Index r, const RandomOrthonormalSource& source) {
  if (r < 1 || r >= d) throw DimensionMismatch("factor dimension must lie in [1, d)");
  Rng rng(source.seed);
  MfaEmbedding emb;
  emb.loading = random_orthonormal(d, r, rng);
  emb.static_part = SymMatrixd(MatrixXd(source.static_scale * MatrixXd::Identity(d, d)));
  return emb;
}

MfaEmbedding make_embedding(Index r, const RCovSeries& series) {
  return estimate_embedding(series, r).embedding;
}

SymMatrixd compose(const MfaEmbedding& emb, const MatrixXd& factor) {
  if (factor.rows() != emb.factors() || factor.cols() != emb.factors() ||
      emb.static_part.dim() != emb.dim()) {
    throw DimensionMismatch("factor matrix does not match the embedding");
  }
  return SymMatrixd(MatrixXd(emb.loading * factor * emb.loading.transpose() +
                             emb.static_part.matrix()));
}

RCovSeries embed_factors(const std::vector<SpdMatrixd>& factors, const MfaEmbedding& emb) {
  std::vector<SpdMatrixd> out;
  out.reserve(factors.size());
  for (const auto& f : factors) out.emplace_back(compose(emb, f.matrix()));
  return RCovSeries(std::move(out));
}

}  // namespace rcov
