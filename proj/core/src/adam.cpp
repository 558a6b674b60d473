#include "evseg/adam.hpp"

#include "evseg/errors.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace evseg {

void AdamConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ContractError("adam: learning rate must be finite and >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ContractError("adam: betas must be in [0, 1)");
  if (!(epsilon > 0.0)) throw ContractError("adam: epsilon must be > 0");
}

double gradient_norm(std::span<const ParamSlot> slots) {
  double sq = 0.0;
  for (const auto& s : slots) sq += s.grad->squaredNorm();
  return std::sqrt(sq);
}

void clip_gradients(std::span<const ParamSlot> slots, double max_norm) {
  const double norm = gradient_norm(slots);
  if (!(norm > max_norm)) return;
  const double scale = max_norm / norm;
  for (const auto& s : slots) *s.grad *= scale;
}

void adam_step(std::span<const ParamSlot> slots, std::uint64_t step, const AdamConfig& config) {
  if (step == 0) throw ContractError("adam: step count is 1-based");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto& s = slots[i];
    if (s.grad->rows() != s.value->rows() || s.grad->cols() != s.value->cols() ||
        s.first_moment->size() != s.value->size() || s.second_moment->size() != s.value->size())
      throw ContractError("adam: buffer shape mismatch in tensor " + std::to_string(i));
    if (!s.grad->allFinite())
      throw NumericError("adam: non-finite gradient in tensor " + std::to_string(i));
  }
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step));
  auto proposal = [&](const ParamSlot& s) {
    const auto g = s.grad->array();
    const auto m1 = b1 * s.first_moment->array() + (1.0 - b1) * g;
    const auto m2 = b2 * s.second_moment->array() + (1.0 - b2) * g.square();
    return std::pair{m2, s.value->array() - config.learning_rate * (m1 / correction1) /
                                                ((m2 / correction2).sqrt() + config.epsilon)};
  };
  // Nothing is written unless every updated tensor stays finite.
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto [m2, value] = proposal(slots[i]);
    if (!m2.isFinite().all() || !value.isFinite().all())
      throw NumericError("adam: update overflows tensor " + std::to_string(i));
  }
  for (const auto& s : slots) {
    auto m1 = s.first_moment->array();
    auto m2 = s.second_moment->array();
    const auto g = s.grad->array();
    m1 = b1 * m1 + (1.0 - b1) * g;
    m2 = b2 * m2 + (1.0 - b2) * g.square();
    s.value->array() -=
        config.learning_rate * (m1 / correction1) / ((m2 / correction2).sqrt() + config.epsilon);
  }
}

}  // namespace evseg
