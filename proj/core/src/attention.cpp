#include "evseg/attention.hpp"

#include "evseg/errors.hpp"

#include <string>

namespace evseg {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ContractError("attention: " + what);
}

Matrix uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-0.05, 0.05);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

}  // namespace

AttentionWeights AttentionWeights::zeros(Eigen::Index feature_dim, Eigen::Index hidden_dim,
                                         Eigen::Index attention_dim) {
  return {Matrix::Zero(attention_dim, hidden_dim), Matrix::Zero(attention_dim, feature_dim),
          Matrix::Zero(attention_dim, 1), Matrix::Zero(attention_dim, 1)};
}

AttentionWeights init_attention(Eigen::Index feature_dim, Eigen::Index hidden_dim,
                                Eigen::Index attention_dim, std::mt19937_64& rng) {
  require(feature_dim > 0 && hidden_dim > 0 && attention_dim > 0, "dimensions must be positive");
  AttentionWeights w;
  w.w_hidden = uniform(attention_dim, hidden_dim, rng);
  w.w_feature = uniform(attention_dim, feature_dim, rng);
  w.bias = Matrix::Zero(attention_dim, 1);
  w.score = uniform(attention_dim, 1, rng);
  return w;
}

AttentionForward attention_forward(const AttentionWeights& w, HiddenPairing pairing,
                                   const Matrix& hidden_prev, const Matrix& frame) {
  const auto g = frame.cols();
  require(g > 0, "frame has no locations");
  require(frame.rows() == w.feature_dim(), "frame feature dim mismatch");
  require(hidden_prev.rows() == w.hidden_dim() && hidden_prev.cols() == g,
          "hidden state shape mismatch");

  AttentionForward out;
  auto& tape = out.tape;
  tape.pairing = pairing;
  tape.frame = frame;
  if (pairing == HiddenPairing::MeanPooled) {
    tape.hidden = hidden_prev.rowwise().mean().replicate(1, g);
  } else {
    tape.hidden = hidden_prev;
  }

  Matrix pre = w.w_hidden * tape.hidden + w.w_feature * frame;
  pre.colwise() += w.bias.col(0);
  tape.activated = pre.array().tanh().matrix();
  const Vector scores = tape.activated.transpose() * w.score.col(0);
  for (Eigen::Index k = 0; k < g; ++k) {
    if (!std::isfinite(scores(k)))
      throw NumericError("attention: non-finite score at location " + std::to_string(k));
  }

  const double peak = scores.maxCoeff();
  Vector e = (scores.array() - peak).exp().matrix();
  tape.weights = e / e.sum();

  out.map.weights = tape.weights;
  out.masked = frame * tape.weights.asDiagonal();
  return out;
}

AttentionGrads attention_backward(const AttentionWeights& w, const AttentionTape& tape,
                                  const Matrix& grad_masked, const Vector& grad_weights_extra) {
  const auto g = tape.frame.cols();
  require(tape.weights.size() == g && tape.activated.cols() == g, "tape is inconsistent");
  require(tape.activated.rows() == w.attention_dim() && tape.frame.rows() == w.feature_dim() &&
              tape.hidden.rows() == w.hidden_dim(),
          "tape does not match these weights");
  require(grad_masked.rows() == tape.frame.rows() && grad_masked.cols() == g,
          "grad_masked shape mismatch");
  require(grad_weights_extra.size() == g, "grad_weights_extra size mismatch");

  // dL/dA_g = <dL/dI''_g, x_g> + extra_g
  const Vector grad_weights =
      (grad_masked.cwiseProduct(tape.frame)).colwise().sum().transpose() + grad_weights_extra;
  // softmax Jacobian: ds_g = A_g (dA_g - sum_k A_k dA_k)
  const double mean = tape.weights.dot(grad_weights);
  const Vector grad_scores =
      (tape.weights.array() * (grad_weights.array() - mean)).matrix();

  const Matrix grad_activated = w.score.col(0) * grad_scores.transpose();  // Da x G
  const Matrix grad_pre =
      (grad_activated.array() * (1.0 - tape.activated.array().square())).matrix();

  AttentionGrads out;
  out.params.score = tape.activated * grad_scores;
  out.params.bias = grad_pre.rowwise().sum();
  out.params.w_hidden = grad_pre * tape.hidden.transpose();
  out.params.w_feature = grad_pre * tape.frame.transpose();

  out.hidden_prev = w.w_hidden.transpose() * grad_pre;
  if (tape.pairing == HiddenPairing::MeanPooled) {
    const Vector pooled = out.hidden_prev.rowwise().sum() / static_cast<double>(g);
    out.hidden_prev = pooled.replicate(1, g);
  }
  out.frame = grad_masked * tape.weights.asDiagonal();
  out.frame += w.w_feature.transpose() * grad_pre;
  return out;
}

}  // namespace evseg
