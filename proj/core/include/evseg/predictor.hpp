#pragma once

// Bank of G LSTM cells, one per grid location, predicting next-frame features.
//
// Per location g (h~ = h_{t-1,g} masked by recurrent dropout when training):
//   ProjectedHidden:  u = P [ R h~ + r ; I''_g ] + p
//   StrictTeacher:    u = P [ I''_g ; I'_g ]     + p
//   [i f o c^] = W u + U h~ + b   (sigmoid, sigmoid, sigmoid, tanh)
//   c_t = f * c_{t-1} + i * c^,   h_t = o * tanh(c_t),   y'_g = Y h_t + y
//
// Inputs are always the true encoded features (teacher forcing), never the
// previous prediction.

#include "evseg/tensor.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace evseg {

enum class InputMode {
  ProjectedHidden,  // concat(Gamma(h_{t-1}), I''_t)
  StrictTeacher,    // concat(I''_t, I'_t), no hidden term in the projection
};

struct PredictorConfig {
  Eigen::Index feature_dim = 1;  // M
  Eigen::Index hidden_dim = 1;   // H
  Eigen::Index input_dim = 1;    // width of the projected LSTM input
  Eigen::Index locations = 1;    // G
  bool shared_weights = true;    // false: one weight set per location
  InputMode mode = InputMode::ProjectedHidden;

  Eigen::Index concat_dim() const {
    return mode == InputMode::ProjectedHidden ? hidden_dim + feature_dim : 2 * feature_dim;
  }
  void validate() const;
};

struct CellWeights {
  Matrix hidden_proj;       // H x H  (unused in StrictTeacher mode, kept 0x0)
  Matrix hidden_proj_bias;  // H x 1
  Matrix input_proj;        // Din x concat
  Matrix input_proj_bias;   // Din x 1
  Matrix gate_input;        // 4H x Din, gate row blocks: input, forget, output, candidate
  Matrix gate_hidden;       // 4H x H
  Matrix gate_bias;         // 4H x 1
  Matrix output;            // M x H
  Matrix output_bias;       // M x 1
};

struct PredictorWeights {
  std::vector<CellWeights> cells;  // size 1 when shared, G otherwise

  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
  static std::vector<const char*> cell_tensor_names();

  static PredictorWeights zeros(const PredictorConfig& config);
};

/// Weights ~ U(-0.05, 0.05); biases zero except the forget gate (1.0).
PredictorWeights init_predictor(const PredictorConfig& config, std::mt19937_64& rng);

using LstmParams = Trainable<PredictorWeights>;

struct PredictorState {
  Matrix hidden;  // H x G
  Matrix cell;    // H x G
  std::uint64_t step = 0;

  static PredictorState zeros(const PredictorConfig& config);
};

/// Inverted-dropout keep mask on the recurrent hidden input, entries in {0, 1/(1-p)}.
struct DropoutMask {
  Matrix keep;  // H x G

  static DropoutMask all_keep(Eigen::Index hidden_dim, Eigen::Index locations);
  static DropoutMask sample(Eigen::Index hidden_dim, Eigen::Index locations, double drop_rate,
                            std::mt19937_64& rng);
};

struct PredictorTape {
  InputMode mode = InputMode::ProjectedHidden;
  Matrix keep;         // H x G, ones when not training
  Matrix hidden_in;    // H x G, h_{t-1} after dropout
  Matrix cell_prev;    // H x G
  Matrix concat;       // concat x G
  Matrix input;        // Din x G
  Matrix gates;        // 4H x G, activated
  Matrix cell;         // H x G
  Matrix cell_tanh;    // H x G
  Matrix hidden;       // H x G
};

struct PredictorForward {
  Matrix prediction;  // M x G
  PredictorState state;
  PredictorTape tape;
};

/// Throws NumericError with the step index if the new state is non-finite.
PredictorForward predictor_forward(const PredictorWeights& w, const PredictorConfig& config,
                                   const PredictorState& state, const Matrix& masked,
                                   const Matrix& frame, const DropoutMask& mask, bool training);

struct PredictorGrads {
  PredictorWeights params;
  Matrix hidden_prev;  // H x G
  Matrix cell_prev;    // H x G
  Matrix masked;       // M x G
  Matrix frame;        // M x G
};

PredictorGrads predictor_backward(const PredictorWeights& w, const PredictorTape& tape,
                                  const Matrix& grad_prediction, const Matrix& grad_hidden_next,
                                  const Matrix& grad_cell_next);

}  // namespace evseg
