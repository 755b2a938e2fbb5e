#include "rcov/nn/loss.hpp"

#include <string>

#include "rcov/errors.hpp"

namespace rcov::nn {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::L1: return "l1";
    case LossKind::L2: return "l2";
    case LossKind::Huber: return "huber";
  }
  return "?";
}

std::string_view to_string(HuberMode mode) {
  return mode == HuberMode::MatrixNorm ? "matrix-norm" : "cell-wise";
}

LossKind parse_loss_kind(std::string_view name) {
  for (auto k : {LossKind::L1, LossKind::L2, LossKind::Huber})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown loss '" + std::string(name) + "'");
}

HuberMode parse_huber_mode(std::string_view name) {
  for (auto m : {HuberMode::MatrixNorm, HuberMode::CellWise})
    if (to_string(m) == name) return m;
  throw ConfigError("unknown huber mode '" + std::string(name) + "'");
}

double huber(double r, double delta) {
  const double a = std::abs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

double sample_loss(const MatrixXd& pred, const MatrixXd& target, const LossConfig& cfg,
                   MatrixXd* grad) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw ShapeMismatch("prediction and target shapes differ");
  const MatrixXd r = pred - target;
  const auto sgn = [](const MatrixXd& m) { return MatrixXd(m.unaryExpr([](double v) { return sign(v); })); };
  switch (cfg.kind) {
    case LossKind::L1:
      if (grad) *grad = sgn(r);
      return r.cwiseAbs().sum();
    case LossKind::L2:
      if (grad) *grad = r;
      return 0.5 * r.squaredNorm();
    case LossKind::Huber:
      if (cfg.mode == HuberMode::MatrixNorm) {
        const double e1 = r.cwiseAbs().sum();
        if (e1 <= cfg.delta) {
          if (grad) *grad = r;
          return 0.5 * r.squaredNorm();
        }
        if (grad) *grad = cfg.delta * sgn(r);
        return cfg.delta * (e1 - 0.5 * cfg.delta);
      }
      if (grad)
        *grad = r.unaryExpr([d = cfg.delta](double v) { return std::abs(v) <= d ? v : d * sign(v); });
      return r.unaryExpr([d = cfg.delta](double v) { return huber(v, d); }).sum();
  }
  return 0.0;
}

}  // namespace rcov::nn
