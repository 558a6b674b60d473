#pragma once

// Single-pass online training: every incoming frame closes one
// (I'_t, I'_{t+1}) pair, which is scored, backpropagated and used for exactly
// one Adam step. Frames are dropped as soon as the truncated-BPTT window no
// longer needs them.

#include "evseg/adam.hpp"
#include "evseg/attention.hpp"
#include "evseg/errors.hpp"
#include "evseg/feature_stream.hpp"
#include "evseg/losses.hpp"
#include "evseg/model.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace evseg {

struct TrainerConfig {
  AdamConfig adam;
  double dropout = 0.4;
  LossKind training_loss = LossKind::Prediction;
  Reduction reduction = Reduction::Sum;
  std::size_t bptt_window = 1;
  std::uint64_t seed = 0;  // dropout masks
  std::optional<double> grad_clip;

  void validate() const;
};

/// Receives per-frame outputs as soon as they exist.
class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void on_attention(std::uint64_t /*t*/, const AttentionMap& /*map*/) {}
  virtual void on_loss(const LossSample& /*sample*/) {}
};

struct RunOptions {
  bool keep_losses = true;
  bool keep_attention = false;
};

struct RunStats {
  std::uint64_t frames_read = 0;
  std::uint64_t steps = 0;
  std::size_t peak_retained_frames = 0;
  double seconds = 0.0;
};

struct RunOutputs {
  std::vector<LossSample> losses;
  std::vector<AttentionMap> attention;
  Model final_model;
  RunStats stats;
};

/// Raised when a loss, state or gradient goes non-finite. Carries the model
/// as it was before the failing step.
class DivergenceError : public NumericError {
 public:
  DivergenceError(std::uint64_t step, Model last_finite, const std::string& detail);

  std::uint64_t step() const { return step_; }
  const Model& last_finite() const { return last_finite_; }

 private:
  std::uint64_t step_;
  Model last_finite_;
};

/// Push-style trainer for live use; run_stream drives it from a FrameSource.
class OnlineTrainer {
 public:
  OnlineTrainer(const TrainerConfig& config, Model model);

  /// Feeds the next frame (M x G). Returns the sample for the previous frame
  /// once a pair is complete.
  std::optional<LossSample> push(const Matrix& frame, TraceSink* sink = nullptr,
                                 AttentionMap* attention_out = nullptr);

  const Model& model() const { return model_; }
  Model release_model() { return std::move(model_); }
  std::uint64_t frames_seen() const { return frames_seen_; }
  std::size_t retained_frames() const { return history_.size() + (pending_ ? 1 : 0); }
  std::size_t peak_retained_frames() const { return peak_retained_; }

 private:
  struct StepRecord {
    AttentionTape attention;
    PredictorTape predictor;
  };

  void train(const Matrix& grad_prediction, std::uint64_t t);

  TrainerConfig config_;
  Model model_;
  PredictorConfig predictor_config_;
  std::mt19937_64 rng_;
  std::optional<Matrix> pending_;
  std::deque<StepRecord> history_;
  std::uint64_t frames_seen_ = 0;
  std::size_t peak_retained_ = 0;
};

/// Throws ContractError if the stream yields fewer than two frames.
RunOutputs run_stream(const TrainerConfig& config, Model model, FrameSource& stream,
                      TraceSink* sink = nullptr, RunOptions options = {});

struct WorkerResult {
  std::optional<RunOutputs> outputs;
  std::string error;
  std::optional<Model> diverged;  // last finite model when the run diverged

  bool ok() const { return outputs.has_value(); }
};

/// One independent copy of `initial` per stream; results keep input order and
/// a failing stream does not abort the others. `sinks` may be empty or hold
/// one (possibly null) sink per stream. max_workers = 0 means one per stream.
std::vector<WorkerResult> run_parallel(const TrainerConfig& config, const Model& initial,
                                       std::span<FrameSource* const> streams,
                                       std::span<TraceSink* const> sinks = {},
                                       RunOptions options = {}, std::size_t max_workers = 0);

}  // namespace evseg
