#pragma once

#include <string_view>

#include "rcov/linalg/types.hpp"

namespace rcov::nn {

enum class LossKind { L1, L2, Huber };
enum class HuberMode { MatrixNorm, CellWise };

std::string_view to_string(LossKind kind);
std::string_view to_string(HuberMode mode);
LossKind parse_loss_kind(std::string_view name);
HuberMode parse_huber_mode(std::string_view name);

struct LossConfig {
  LossKind kind = LossKind::Huber;
  double delta = 300.0;
  HuberMode mode = HuberMode::MatrixNorm;
};

/// Scalar Huber: r^2 / 2 for |r| <= delta, delta (|r| - delta / 2) beyond.
double huber(double r, double delta);

/// Per-sample loss of pred against target.
///   L1: sum |r|.  L2: sum r^2 / 2.
///   Huber, MatrixNorm: with e1 = sum |r| and e2 = sum r^2, e2 / 2 when
///     e1 <= delta, else delta (e1 - delta / 2).
///   Huber, CellWise: sum of the scalar Huber over cells.
/// Throws ShapeMismatch. When `grad` is given it receives d loss / d pred
/// (sign(0) = 0).
double sample_loss(const MatrixXd& pred, const MatrixXd& target, const LossConfig& cfg,
                   MatrixXd* grad = nullptr);

}  // namespace rcov::nn
