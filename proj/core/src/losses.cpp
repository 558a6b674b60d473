#include "evseg/losses.hpp"

#include "evseg/errors.hpp"

#include <string>

namespace evseg {
namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ContractError(std::string("loss: shape mismatch between prediction and ") + what);
}

}  // namespace

LossKind parse_loss_kind(std::string_view text) {
  if (text == "pred" || text == "prediction") return LossKind::Prediction;
  if (text == "mw" || text == "motion_weighted") return LossKind::MotionWeighted;
  throw ContractError("unknown loss '" + std::string(text) + "' (expected pred|mw)");
}

std::string_view to_string(LossKind kind) {
  return kind == LossKind::Prediction ? "pred" : "mw";
}

Reduction parse_reduction(std::string_view text) {
  if (text == "sum") return Reduction::Sum;
  if (text == "mean") return Reduction::Mean;
  throw ContractError("unknown reduction '" + std::string(text) + "' (expected sum|mean)");
}

std::string_view to_string(Reduction r) { return r == Reduction::Sum ? "sum" : "mean"; }

LossResult prediction_loss(const Matrix& prediction, const Matrix& next_frame, Reduction reduction) {
  require_same_shape(prediction, next_frame, "next frame");
  const Eigen::ArrayXXd diff = next_frame.array() - prediction.array();
  const double scale = reduction == Reduction::Mean ? 1.0 / static_cast<double>(diff.size()) : 1.0;
  return {scale * diff.square().sum(), (-2.0 * scale * diff).matrix()};
}

LossResult motion_weighted_loss(const Matrix& prediction, const Matrix& current_frame,
                                const Matrix& next_frame, Reduction reduction) {
  require_same_shape(prediction, next_frame, "next frame");
  require_same_shape(prediction, current_frame, "current frame");
  const Eigen::ArrayXXd diff = next_frame.array() - prediction.array();
  const Eigen::ArrayXXd motion = (next_frame.array() - current_frame.array()).square();
  const Eigen::ArrayXXd weighted = diff.square() * motion;
  const double scale = reduction == Reduction::Mean ? 1.0 / static_cast<double>(diff.size()) : 1.0;
  // d/dy of (diff^2 m)^2 = 2 (diff^2 m) * m * 2 diff * (-1)
  return {scale * weighted.square().sum(), (-4.0 * scale * weighted * motion * diff).matrix()};
}

}  // namespace evseg
