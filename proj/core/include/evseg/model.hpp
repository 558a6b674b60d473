#pragma once

#include "evseg/attention.hpp"
#include "evseg/feature_stream.hpp"
#include "evseg/predictor.hpp"

#include <cstdint>

namespace evseg {

/// Architecture of one attention + LSTM-bank model. Zero widths mean
/// "derive from feature_dim": hidden = input = M, attention = max(1, M/8).
struct ModelConfig {
  std::uint32_t grid_side = 1;
  std::uint32_t feature_dim = 1;
  std::uint32_t hidden_dim = 0;
  std::uint32_t input_dim = 0;
  std::uint32_t attention_dim = 0;
  HiddenPairing pairing = HiddenPairing::PerLocation;
  InputMode input_mode = InputMode::ProjectedHidden;
  bool shared_weights = true;

  /// Copy with zero widths replaced by their defaults.
  ModelConfig resolved() const;
  PredictorConfig predictor() const;
  Eigen::Index locations() const { return Eigen::Index{grid_side} * grid_side; }
  bool operator==(const ModelConfig&) const = default;

  static ModelConfig for_stream(const StreamHeader& header);
};

struct Model {
  ModelConfig config;  // resolved
  AttentionParams attention;
  LstmParams predictor;
  PredictorState state;
  std::uint64_t adam_step = 0;
};

/// Fresh model with zero hidden/cell state; weights drawn from `seed`.
Model init_model(const ModelConfig& config, std::uint64_t seed);

}  // namespace evseg
