#include "evseg/model.hpp"

#include "evseg/errors.hpp"

#include <algorithm>
#include <random>

namespace evseg {

ModelConfig ModelConfig::resolved() const {
  if (grid_side < 1 || feature_dim < 1) throw ContractError("model: N and M must be >= 1");
  ModelConfig c = *this;
  if (c.hidden_dim == 0) c.hidden_dim = feature_dim;
  if (c.input_dim == 0) c.input_dim = feature_dim;
  if (c.attention_dim == 0) c.attention_dim = std::max<std::uint32_t>(1, feature_dim / 8);
  return c;
}

PredictorConfig ModelConfig::predictor() const {
  const auto c = resolved();
  PredictorConfig p;
  p.feature_dim = c.feature_dim;
  p.hidden_dim = c.hidden_dim;
  p.input_dim = c.input_dim;
  p.locations = c.locations();
  p.shared_weights = c.shared_weights;
  p.mode = c.input_mode;
  return p;
}

ModelConfig ModelConfig::for_stream(const StreamHeader& header) {
  ModelConfig c;
  c.grid_side = header.grid_side;
  c.feature_dim = header.feature_dim;
  return c;
}

Model init_model(const ModelConfig& config, std::uint64_t seed) {
  Model model;
  model.config = config.resolved();
  const auto& c = model.config;
  std::mt19937_64 rng(seed);
  model.attention = AttentionParams(init_attention(c.feature_dim, c.hidden_dim, c.attention_dim, rng));
  const auto pc = c.predictor();
  model.predictor = LstmParams(init_predictor(pc, rng));
  model.state = PredictorState::zeros(pc);
  return model;
}

}  // namespace evseg
