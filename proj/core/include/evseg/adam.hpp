#pragma once

#include "evseg/tensor.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace evseg {

struct AdamConfig {
  double learning_rate = 1e-8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

/// One trainable tensor and its buffers; all four share a shape.
struct ParamSlot {
  Matrix* value;
  Matrix* grad;
  Matrix* first_moment;
  Matrix* second_moment;
};

template <class Weights>
void append_slots(Trainable<Weights>& p, std::vector<ParamSlot>& out) {
  auto values = p.value.tensors();
  auto grads = p.grad.tensors();
  auto m1 = p.first_moment.tensors();
  auto m2 = p.second_moment.tensors();
  for (std::size_t i = 0; i < values.size(); ++i) out.push_back({values[i], grads[i], m1[i], m2[i]});
}

/// Global L2 norm over all gradients.
double gradient_norm(std::span<const ParamSlot> slots);

/// Rescales gradients in place so their global norm is at most max_norm.
void clip_gradients(std::span<const ParamSlot> slots, double max_norm);

/// Bias-corrected Adam update; `step` is the 1-based step count after this
/// update. Throws NumericError before touching anything if a gradient is
/// non-finite.
void adam_step(std::span<const ParamSlot> slots, std::uint64_t step, const AdamConfig& config);

}  // namespace evseg
