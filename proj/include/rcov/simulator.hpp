#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rcov/series.hpp"

namespace rcov {

enum class Innovation { Wishart, MatrixF };

std::string to_string(Innovation innovation);
Innovation parse_innovation(std::string_view name);

/// Parameters of the conditional autoregressive Wishart process with a BEKK
/// scale recursion
///   S(t) = C C^T + sum_i B_i S(t-i) B_i^T + sum_j A_j Sigma(t-j) A_j^T.
struct CawParams {
  Index r = 0;
  double nu = 5.0;    // Wishart degrees of freedom
  double nu1 = 10.0;  // matrix-F numerator degrees of freedom
  double nu2 = 8.0;   // matrix-F denominator degrees of freedom
  MatrixXd c;
  std::vector<MatrixXd> a;  // A_1 .. A_q
  std::vector<MatrixXd> b;  // B_1 .. B_p
  bool diagonal = false;

  Index p() const { return static_cast<Index>(b.size()); }
  Index q() const { return static_cast<Index>(a.size()); }
  Index order() const { return std::max(p(), q()); }
  MatrixXd intercept() const { return c * c.transpose(); }

  /// Throws DimensionMismatch / InvalidDegreesOfFreedom / NotPositiveDefinite.
  void validate(Innovation innovation) const;

  /// r = 3, (p, q) = (2, 2), nu = 5, nu1 = 10, nu2 = 8 and the coefficient
  /// matrices of the reference simulation study.
  static CawParams reference();
};

/// One BEKK update. `scales` holds S(t-1), ..., S(t-p) and `realized` holds
/// Sigma(t-1), ..., Sigma(t-q) (most recent first).
SpdMatrixd bekk_step(const CawParams& params, const std::vector<SpdMatrixd>& scales,
                     const std::vector<SpdMatrixd>& realized);

/// Fixed point of the expected recursion, S = C C^T + sum B S B^T + sum A S A^T
/// (using E[Sigma(t) | past] = S(t)). Throws NotPositiveDefinite when the
/// process is not covariance stationary.
SpdMatrixd stationary_mean(const CawParams& params);

/// Conditional draw of Sigma(t) given its scale S(t); both laws have mean S(t).
SpdMatrixd draw_innovation(const CawParams& params, Innovation innovation,
                           const SpdMatrixd& scale, Rng& rng);

struct CawPath {
  std::vector<SpdMatrixd> factors;  // Sigma_f(t)
  std::vector<SpdMatrixd> scales;   // S_f(t), the conditional means
};

struct SimulationOptions {
  Index length = 5000;
  Index burn_in = 100;
  Innovation innovation = Innovation::Wishart;
  /// S_f(0), ..., S_f(order - 1); defaults to the stationary mean.
  std::vector<SpdMatrixd> init;
};

/// Runs the recursion for burn_in + length steps and returns the last
/// `length`. Deterministic given the rng state.
CawPath simulate_caw(const CawParams& params, const SimulationOptions& opts, Rng& rng);

/// Sigma_x(t) = A Sigma_f(t) A^T + Sigma_0.
struct MfaEmbedding {
  MatrixXd loading;       // d x r with orthonormal columns
  SymMatrixd static_part;  // d x d

  Index dim() const { return loading.rows(); }
  Index factors() const { return loading.cols(); }
};

struct RandomOrthonormalSource {
  std::uint64_t seed = 20210601;
  /// Sigma_0 = static_scale * I.
  double static_scale = 0.1;
};

struct EmbeddingEstimate {
  MfaEmbedding embedding;
  MatrixXd mean;           // sample mean of the series
  MatrixXd dispersion;     // mean of (Sigma(t) - mean)^2
  VectorXd eigenvalues;    // of `dispersion`, descending
  bool degenerate = false;  // dispersion is (numerically) zero
};

/// Loading from the top-r eigenvectors of the dispersion matrix
/// mean_t (Sigma(t) - mean)^2, static part mean - A A^T mean A A^T.
EmbeddingEstimate estimate_embedding(const RCovSeries& series, Index r);

MfaEmbedding make_embedding(Index d, Index r, const RandomOrthonormalSource& source);
MfaEmbedding make_embedding(Index r, const RCovSeries& series);

/// Embeds every factor matrix into full dimension; throws NotPositiveDefinite
/// if an output is not SPD.
RCovSeries embed_factors(const std::vector<SpdMatrixd>& factors, const MfaEmbedding& emb);
SymMatrixd compose(const MfaEmbedding& emb, const MatrixXd& factor);

}  // namespace rcov
