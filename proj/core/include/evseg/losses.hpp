#pragma once

// Self-supervised losses between the prediction y'_t and the next frame I'_{t+1}.
//
//   prediction:      sum (I'_{t+1} - y'_t)^2
//   motion weighted: sum ((I'_{t+1} - y'_t)^2 * (I'_{t+1} - I'_t)^2)^2
//
// The motion-weighted loss is the literal 4th-power form; its dynamic range is
// far steeper than the prediction loss. Gradients are w.r.t. y'_t only.

#include "evseg/tensor.hpp"

#include <cstdint>
#include <string_view>

namespace evseg {

enum class Reduction { Sum, Mean };
enum class LossKind { Prediction, MotionWeighted };

LossKind parse_loss_kind(std::string_view text);  // "pred" | "mw"
std::string_view to_string(LossKind kind);
Reduction parse_reduction(std::string_view text);  // "sum" | "mean"
std::string_view to_string(Reduction r);

struct LossResult {
  double loss = 0.0;
  Matrix grad;  // dL/dy', same shape as the prediction
};

LossResult prediction_loss(const Matrix& prediction, const Matrix& next_frame,
                           Reduction reduction = Reduction::Sum);

LossResult motion_weighted_loss(const Matrix& prediction, const Matrix& current_frame,
                                const Matrix& next_frame, Reduction reduction = Reduction::Sum);

/// Both losses for the prediction made at frame t.
struct LossSample {
  std::uint64_t t = 0;
  double pred_loss = 0.0;
  double mw_loss = 0.0;

  double value(LossKind kind) const {
    return kind == LossKind::Prediction ? pred_loss : mw_loss;
  }
  bool operator==(const LossSample&) const = default;
};

}  // namespace evseg
