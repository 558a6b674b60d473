#include "evseg/predictor.hpp"

#include "evseg/errors.hpp"

#include <string>

namespace evseg {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ContractError("predictor: " + what);
}

Matrix uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-0.05, 0.05);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& x) { return 1.0 / (1.0 + (-x).exp()); }

// Columns handled by weight set `k`.
struct ColumnRange {
  Eigen::Index start;
  Eigen::Index count;
};

ColumnRange columns_of(std::size_t k, std::size_t sets, Eigen::Index locations) {
  if (sets == 1) return {0, locations};
  return {static_cast<Eigen::Index>(k), 1};
}

void check_cell_shapes(const CellWeights& c, const PredictorTape& tape, Eigen::Index hidden,
                       Eigen::Index features) {
  const auto din = tape.input.rows();
  require(c.gate_input.rows() == 4 * hidden && c.gate_input.cols() == din,
          "gate_input shape does not match tape");
  require(c.gate_hidden.rows() == 4 * hidden && c.gate_hidden.cols() == hidden,
          "gate_hidden shape does not match tape");
  require(c.input_proj.rows() == din && c.input_proj.cols() == tape.concat.rows(),
          "input_proj shape does not match tape");
  require(c.output.rows() == features && c.output.cols() == hidden,
          "output shape does not match tape");
}

}  // namespace

void PredictorConfig::validate() const {
  require(feature_dim > 0 && hidden_dim > 0 && input_dim > 0 && locations > 0,
          "dimensions must be positive");
}

std::vector<Matrix*> PredictorWeights::tensors() {
  std::vector<Matrix*> out;
  for (auto& c : cells)
    out.insert(out.end(), {&c.hidden_proj, &c.hidden_proj_bias, &c.input_proj, &c.input_proj_bias,
                           &c.gate_input, &c.gate_hidden, &c.gate_bias, &c.output, &c.output_bias});
  return out;
}

std::vector<const Matrix*> PredictorWeights::tensors() const {
  std::vector<const Matrix*> out;
  for (const auto& c : cells)
    out.insert(out.end(), {&c.hidden_proj, &c.hidden_proj_bias, &c.input_proj, &c.input_proj_bias,
                           &c.gate_input, &c.gate_hidden, &c.gate_bias, &c.output, &c.output_bias});
  return out;
}

std::vector<const char*> PredictorWeights::cell_tensor_names() {
  return {"hidden_proj", "hidden_proj_bias", "input_proj", "input_proj_bias", "gate_input",
          "gate_hidden", "gate_bias",        "output",     "output_bias"};
}

PredictorWeights PredictorWeights::zeros(const PredictorConfig& config) {
  config.validate();
  const auto h = config.hidden_dim;
  const bool projected = config.mode == InputMode::ProjectedHidden;
  CellWeights c;
  c.hidden_proj = Matrix::Zero(projected ? h : 0, projected ? h : 0);
  c.hidden_proj_bias = Matrix::Zero(projected ? h : 0, projected ? 1 : 0);
  c.input_proj = Matrix::Zero(config.input_dim, config.concat_dim());
  c.input_proj_bias = Matrix::Zero(config.input_dim, 1);
  c.gate_input = Matrix::Zero(4 * h, config.input_dim);
  c.gate_hidden = Matrix::Zero(4 * h, h);
  c.gate_bias = Matrix::Zero(4 * h, 1);
  c.output = Matrix::Zero(config.feature_dim, h);
  c.output_bias = Matrix::Zero(config.feature_dim, 1);
  const std::size_t sets = config.shared_weights ? 1 : static_cast<std::size_t>(config.locations);
  return PredictorWeights{std::vector<CellWeights>(sets, c)};
}

PredictorWeights init_predictor(const PredictorConfig& config, std::mt19937_64& rng) {
  PredictorWeights w = PredictorWeights::zeros(config);
  const auto h = config.hidden_dim;
  for (auto& c : w.cells) {
    c.hidden_proj = uniform(c.hidden_proj.rows(), c.hidden_proj.cols(), rng);
    c.input_proj = uniform(c.input_proj.rows(), c.input_proj.cols(), rng);
    c.gate_input = uniform(c.gate_input.rows(), c.gate_input.cols(), rng);
    c.gate_hidden = uniform(c.gate_hidden.rows(), c.gate_hidden.cols(), rng);
    c.output = uniform(c.output.rows(), c.output.cols(), rng);
    c.gate_bias.middleRows(h, h).setOnes();
  }
  return w;
}

PredictorState PredictorState::zeros(const PredictorConfig& config) {
  config.validate();
  return {Matrix::Zero(config.hidden_dim, config.locations),
          Matrix::Zero(config.hidden_dim, config.locations), 0};
}

DropoutMask DropoutMask::all_keep(Eigen::Index hidden_dim, Eigen::Index locations) {
  return {Matrix::Ones(hidden_dim, locations)};
}

DropoutMask DropoutMask::sample(Eigen::Index hidden_dim, Eigen::Index locations, double drop_rate,
                                std::mt19937_64& rng) {
  if (!(drop_rate >= 0.0 && drop_rate < 1.0))
    throw ContractError("dropout rate must be in [0, 1)");
  if (drop_rate == 0.0) return all_keep(hidden_dim, locations);
  std::bernoulli_distribution keep(1.0 - drop_rate);
  const double scale = 1.0 / (1.0 - drop_rate);
  DropoutMask m{Matrix(hidden_dim, locations)};
  for (Eigen::Index j = 0; j < locations; ++j)
    for (Eigen::Index i = 0; i < hidden_dim; ++i) m.keep(i, j) = keep(rng) ? scale : 0.0;
  return m;
}

PredictorForward predictor_forward(const PredictorWeights& w, const PredictorConfig& config,
                                   const PredictorState& state, const Matrix& masked,
                                   const Matrix& frame, const DropoutMask& mask, bool training) {
  config.validate();
  const auto g = config.locations;
  const auto h = config.hidden_dim;
  const auto m = config.feature_dim;
  require(w.cells.size() == (config.shared_weights ? 1u : static_cast<std::size_t>(g)),
          "weight set count does not match sharing mode");
  require(state.hidden.rows() == h && state.hidden.cols() == g, "hidden state shape mismatch");
  require(state.cell.rows() == h && state.cell.cols() == g, "cell state shape mismatch");
  require(masked.rows() == m && masked.cols() == g, "masked features shape mismatch");
  require(frame.rows() == m && frame.cols() == g, "frame shape mismatch");
  if (training) require(mask.keep.rows() == h && mask.keep.cols() == g, "dropout mask shape mismatch");

  PredictorForward out;
  auto& tape = out.tape;
  tape.mode = config.mode;
  tape.keep = training ? mask.keep : Matrix::Ones(h, g);
  tape.hidden_in = state.hidden.cwiseProduct(tape.keep);
  tape.cell_prev = state.cell;
  tape.concat.resize(config.concat_dim(), g);
  tape.input.resize(config.input_dim, g);
  tape.gates.resize(4 * h, g);
  out.prediction.resize(m, g);

  for (std::size_t k = 0; k < w.cells.size(); ++k) {
    const auto& c = w.cells[k];
    const auto [start, count] = columns_of(k, w.cells.size(), g);
    const auto h_in = tape.hidden_in.middleCols(start, count);
    auto concat = tape.concat.middleCols(start, count);
    if (config.mode == InputMode::ProjectedHidden) {
      concat.topRows(h) = (c.hidden_proj * h_in).colwise() + c.hidden_proj_bias.col(0);
      concat.bottomRows(m) = masked.middleCols(start, count);
    } else {
      concat.topRows(m) = masked.middleCols(start, count);
      concat.bottomRows(m) = frame.middleCols(start, count);
    }
    auto input = tape.input.middleCols(start, count);
    input = (c.input_proj * concat).colwise() + c.input_proj_bias.col(0);

    Matrix z = c.gate_input * input + c.gate_hidden * h_in;
    z.colwise() += c.gate_bias.col(0);
    auto gates = tape.gates.middleCols(start, count);
    gates.topRows(3 * h) = sigmoid(z.topRows(3 * h).array()).matrix();
    gates.bottomRows(h) = z.bottomRows(h).array().tanh().matrix();
  }

  const auto in_gate = tape.gates.topRows(h).array();
  const auto forget_gate = tape.gates.middleRows(h, h).array();
  const auto out_gate = tape.gates.middleRows(2 * h, h).array();
  const auto candidate = tape.gates.bottomRows(h).array();
  tape.cell = (forget_gate * state.cell.array() + in_gate * candidate).matrix();
  tape.cell_tanh = tape.cell.array().tanh().matrix();
  tape.hidden = (out_gate * tape.cell_tanh.array()).matrix();

  for (std::size_t k = 0; k < w.cells.size(); ++k) {
    const auto& c = w.cells[k];
    const auto [start, count] = columns_of(k, w.cells.size(), g);
    out.prediction.middleCols(start, count) =
        (c.output * tape.hidden.middleCols(start, count)).colwise() + c.output_bias.col(0);
  }

  if (!tape.cell.allFinite() || !tape.hidden.allFinite() || !out.prediction.allFinite())
    throw NumericError("predictor: non-finite state at step " + std::to_string(state.step));

  out.state = {tape.hidden, tape.cell, state.step + 1};
  return out;
}

PredictorGrads predictor_backward(const PredictorWeights& w, const PredictorTape& tape,
                                  const Matrix& grad_prediction, const Matrix& grad_hidden_next,
                                  const Matrix& grad_cell_next) {
  const auto h = tape.hidden.rows();
  const auto g = tape.hidden.cols();
  require(!w.cells.empty(), "no weights");
  const auto m = w.cells.front().output.rows();
  require(w.cells.size() == 1 || w.cells.size() == static_cast<std::size_t>(g),
          "weight set count does not match tape");
  require(tape.gates.rows() == 4 * h && tape.gates.cols() == g, "tape is inconsistent");
  require(grad_prediction.rows() == m && grad_prediction.cols() == g,
          "grad_prediction shape mismatch");
  require(grad_hidden_next.rows() == h && grad_hidden_next.cols() == g,
          "grad_hidden_next shape mismatch");
  require(grad_cell_next.rows() == h && grad_cell_next.cols() == g, "grad_cell_next shape mismatch");
  for (const auto& c : w.cells) check_cell_shapes(c, tape, h, m);

  PredictorGrads out;
  out.params.cells.resize(w.cells.size());
  Matrix grad_hidden = grad_hidden_next;
  for (std::size_t k = 0; k < w.cells.size(); ++k) {
    const auto& c = w.cells[k];
    auto& gc = out.params.cells[k];
    const auto [start, count] = columns_of(k, w.cells.size(), g);
    const auto dy = grad_prediction.middleCols(start, count);
    gc.output = dy * tape.hidden.middleCols(start, count).transpose();
    gc.output_bias = dy.rowwise().sum();
    grad_hidden.middleCols(start, count) += c.output.transpose() * dy;
  }

  const auto in_gate = tape.gates.topRows(h).array();
  const auto forget_gate = tape.gates.middleRows(h, h).array();
  const auto out_gate = tape.gates.middleRows(2 * h, h).array();
  const auto candidate = tape.gates.bottomRows(h).array();

  const Eigen::ArrayXXd grad_cell =
      grad_hidden.array() * out_gate * (1.0 - tape.cell_tanh.array().square()) +
      grad_cell_next.array();
  Matrix grad_z(4 * h, g);
  grad_z.topRows(h) = (grad_cell * candidate * in_gate * (1.0 - in_gate)).matrix();
  grad_z.middleRows(h, h) =
      (grad_cell * tape.cell_prev.array() * forget_gate * (1.0 - forget_gate)).matrix();
  grad_z.middleRows(2 * h, h) =
      (grad_hidden.array() * tape.cell_tanh.array() * out_gate * (1.0 - out_gate)).matrix();
  grad_z.bottomRows(h) = (grad_cell * in_gate * (1.0 - candidate.square())).matrix();
  out.cell_prev = (grad_cell * forget_gate).matrix();

  Matrix grad_hidden_in(h, g);
  out.masked.resize(m, g);
  out.frame = Matrix::Zero(m, g);
  for (std::size_t k = 0; k < w.cells.size(); ++k) {
    const auto& c = w.cells[k];
    auto& gc = out.params.cells[k];
    const auto [start, count] = columns_of(k, w.cells.size(), g);
    const auto dz = grad_z.middleCols(start, count);
    const auto h_in = tape.hidden_in.middleCols(start, count);

    gc.gate_input = dz * tape.input.middleCols(start, count).transpose();
    gc.gate_hidden = dz * h_in.transpose();
    gc.gate_bias = dz.rowwise().sum();
    const Matrix grad_input = c.gate_input.transpose() * dz;
    auto grad_h_in = grad_hidden_in.middleCols(start, count);
    grad_h_in = c.gate_hidden.transpose() * dz;

    gc.input_proj = grad_input * tape.concat.middleCols(start, count).transpose();
    gc.input_proj_bias = grad_input.rowwise().sum();
    const Matrix grad_concat = c.input_proj.transpose() * grad_input;

    if (tape.mode == InputMode::ProjectedHidden) {
      const auto grad_proj = grad_concat.topRows(h);
      gc.hidden_proj = grad_proj * h_in.transpose();
      gc.hidden_proj_bias = grad_proj.rowwise().sum();
      grad_h_in += c.hidden_proj.transpose() * grad_proj;
      out.masked.middleCols(start, count) = grad_concat.bottomRows(m);
    } else {
      gc.hidden_proj = Matrix::Zero(c.hidden_proj.rows(), c.hidden_proj.cols());
      gc.hidden_proj_bias = Matrix::Zero(c.hidden_proj_bias.rows(), c.hidden_proj_bias.cols());
      out.masked.middleCols(start, count) = grad_concat.topRows(m);
      out.frame.middleCols(start, count) = grad_concat.bottomRows(m);
    }
  }
  out.hidden_prev = grad_hidden_in.cwiseProduct(tape.keep);
  return out;
}

}  // namespace evseg
