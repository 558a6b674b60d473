#pragma once

// Additive (Bahdanau) attention over the G grid locations of a frame.
//
//   score_g = v . tanh(W_h h_g + W_x x_g + b)
//   A       = softmax(score)
//   I''_g   = A_g * x_g
//
// The two inner fully connected layers would each carry a bias; they are
// summed before the tanh so a single bias b is kept.

#include "evseg/tensor.hpp"

#include <random>
#include <vector>

namespace evseg {

enum class HiddenPairing {
  PerLocation,  // location g is scored against hidden state of cell g
  MeanPooled,   // every location is scored against the mean hidden state
};

struct AttentionWeights {
  Matrix w_hidden;   // Da x H
  Matrix w_feature;  // Da x M
  Matrix bias;       // Da x 1
  Matrix score;      // Da x 1 (v)

  std::vector<Matrix*> tensors() { return {&w_hidden, &w_feature, &bias, &score}; }
  std::vector<const Matrix*> tensors() const { return {&w_hidden, &w_feature, &bias, &score}; }
  static std::vector<const char*> names() { return {"w_hidden", "w_feature", "bias", "score"}; }

  Eigen::Index attention_dim() const { return bias.rows(); }
  Eigen::Index hidden_dim() const { return w_hidden.cols(); }
  Eigen::Index feature_dim() const { return w_feature.cols(); }

  static AttentionWeights zeros(Eigen::Index feature_dim, Eigen::Index hidden_dim,
                                Eigen::Index attention_dim);
};

/// Weights ~ U(-0.05, 0.05), bias zero.
AttentionWeights init_attention(Eigen::Index feature_dim, Eigen::Index hidden_dim,
                                Eigen::Index attention_dim, std::mt19937_64& rng);

using AttentionParams = Trainable<AttentionWeights>;

/// G non-negative weights summing to one.
struct AttentionMap {
  Vector weights;
};

struct AttentionTape {
  HiddenPairing pairing = HiddenPairing::PerLocation;
  Matrix hidden;     // H x G, after pooling when MeanPooled
  Matrix frame;      // M x G
  Matrix activated;  // Da x G, tanh(...)
  Vector weights;    // G
};

struct AttentionForward {
  AttentionMap map;
  Matrix masked;  // M x G
  AttentionTape tape;
};

/// Throws ContractError on shape mismatch and NumericError (naming the
/// location) on a non-finite score.
AttentionForward attention_forward(const AttentionWeights& w, HiddenPairing pairing,
                                   const Matrix& hidden_prev, const Matrix& frame);

struct AttentionGrads {
  AttentionWeights params;
  Matrix hidden_prev;  // H x G
  Matrix frame;        // M x G
};

/// Reverse-mode gradients given dL/d(masked) and an extra dL/d(weights) term.
AttentionGrads attention_backward(const AttentionWeights& w, const AttentionTape& tape,
                                  const Matrix& grad_masked, const Vector& grad_weights_extra);

}  // namespace evseg
