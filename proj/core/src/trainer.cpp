#include "evseg/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

namespace evseg {
namespace {

template <class Weights>
void accumulate(Weights& into, const Weights& grad) {
  auto dst = into.tensors();
  const auto src = grad.tensors();
  for (std::size_t i = 0; i < dst.size(); ++i) *dst[i] += *src[i];
}

template <class Weights>
void zero(Weights& w) {
  for (Matrix* t : w.tensors()) t->setZero();
}

}  // namespace

void TrainerConfig::validate() const {
  adam.validate();
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ContractError("trainer: dropout must be in [0, 1)");
  if (bptt_window < 1) throw ContractError("trainer: bptt window must be >= 1");
  if (grad_clip && !(*grad_clip > 0.0)) throw ContractError("trainer: grad clip must be > 0");
}

DivergenceError::DivergenceError(std::uint64_t step, Model last_finite, const std::string& detail)
    : NumericError("diverged at step " + std::to_string(step) + ": " + detail),
      step_(step),
      last_finite_(std::move(last_finite)) {}

OnlineTrainer::OnlineTrainer(const TrainerConfig& config, Model model)
    : config_(config),
      model_(std::move(model)),
      predictor_config_(model_.config.predictor()),
      rng_(config.seed) {
  config_.validate();
}

std::optional<LossSample> OnlineTrainer::push(const Matrix& frame, TraceSink* sink,
                                              AttentionMap* attention_out) {
  if (frame.rows() != predictor_config_.feature_dim || frame.cols() != predictor_config_.locations)
    throw ContractError("trainer: frame shape does not match the model");
  ++frames_seen_;
  if (!pending_) {
    pending_ = frame;
    peak_retained_ = std::max(peak_retained_, retained_frames());
    return std::nullopt;
  }

  const std::uint64_t t = frames_seen_ - 2;
  Matrix current = std::move(*pending_);
  pending_ = frame;

  const auto& cfg = predictor_config_;
  const DropoutMask mask = DropoutMask::sample(cfg.hidden_dim, cfg.locations, config_.dropout, rng_);

  LossSample sample{t, 0.0, 0.0};
  LossResult train_loss;
  StepRecord record;
  try {
    auto att = attention_forward(model_.attention.value, model_.config.pairing, model_.state.hidden,
                                 current);
    auto pred = predictor_forward(model_.predictor.value, cfg, model_.state, att.masked, current,
                                  mask, true);
    auto pl = prediction_loss(pred.prediction, *pending_, config_.reduction);
    auto mw = motion_weighted_loss(pred.prediction, current, *pending_, config_.reduction);
    if (!std::isfinite(pl.loss) || !std::isfinite(mw.loss))
      throw NumericError("non-finite loss");
    sample = {t, pl.loss, mw.loss};
    train_loss = config_.training_loss == LossKind::Prediction ? std::move(pl) : std::move(mw);

    if (attention_out) *attention_out = att.map;
    if (sink) {
      sink->on_attention(t, att.map);
      sink->on_loss(sample);
    }
    record.attention = std::move(att.tape);
    record.predictor = std::move(pred.tape);
    history_.push_back(std::move(record));
    if (history_.size() > config_.bptt_window) history_.pop_front();
    peak_retained_ = std::max(peak_retained_, retained_frames());

    train(train_loss.grad, t);
    model_.state = std::move(pred.state);
  } catch (const DivergenceError&) {
    throw;
  } catch (const NumericError& e) {
    throw DivergenceError(t, model_, e.what());
  }
  return sample;
}

void OnlineTrainer::train(const Matrix& grad_prediction, std::uint64_t t) {
  zero(model_.attention.grad);
  zero(model_.predictor.grad);

  const auto h = predictor_config_.hidden_dim;
  const auto g = predictor_config_.locations;
  Matrix upstream = grad_prediction;
  Matrix grad_hidden = Matrix::Zero(h, g);
  Matrix grad_cell = Matrix::Zero(h, g);
  const Vector no_extra = Vector::Zero(g);

  // Newest step first; older steps only receive gradient through the state.
  for (auto it = history_.rbegin(); it != history_.rend(); ++it) {
    auto pg = predictor_backward(model_.predictor.value, it->predictor, upstream, grad_hidden,
                                 grad_cell);
    accumulate(model_.predictor.grad, pg.params);
    auto ag = attention_backward(model_.attention.value, it->attention, pg.masked, no_extra);
    accumulate(model_.attention.grad, ag.params);
    if (std::next(it) == history_.rend()) break;
    grad_hidden = pg.hidden_prev + ag.hidden_prev;
    grad_cell = std::move(pg.cell_prev);
    upstream.setZero();
  }

  std::vector<ParamSlot> slots;
  append_slots(model_.attention, slots);
  append_slots(model_.predictor, slots);
  if (config_.grad_clip) clip_gradients(slots, *config_.grad_clip);
  for (const auto& s : slots) {
    if (!s.grad->allFinite()) throw DivergenceError(t, model_, "non-finite gradient");
  }
  adam_step(slots, model_.adam_step + 1, config_.adam);
  ++model_.adam_step;
}

RunOutputs run_stream(const TrainerConfig& config, Model model, FrameSource& stream,
                      TraceSink* sink, RunOptions options) {
  const auto started = std::chrono::steady_clock::now();
  const auto& header = stream.header();
  if (header.grid_side != model.config.grid_side || header.feature_dim != model.config.feature_dim)
    throw ContractError("run_stream: stream shape does not match the model");

  OnlineTrainer trainer(config, std::move(model));
  RunOutputs out;
  AttentionMap map;
  while (auto frame = stream.next()) {
    const Matrix m = to_matrix(*frame, header);
    frame.reset();
    auto sample = trainer.push(m, sink, options.keep_attention ? &map : nullptr);
    if (!sample) continue;
    if (options.keep_losses) out.losses.push_back(*sample);
    if (options.keep_attention) out.attention.push_back(map);
  }
  if (trainer.frames_seen() < 2)
    throw ContractError("run_stream: stream must contain at least 2 frames, got " +
                        std::to_string(trainer.frames_seen()));
  out.stats.frames_read = trainer.frames_seen();
  out.stats.steps = trainer.frames_seen() - 1;
  out.stats.peak_retained_frames = trainer.peak_retained_frames();
  out.final_model = trainer.release_model();
  out.stats.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

std::vector<WorkerResult> run_parallel(const TrainerConfig& config, const Model& initial,
                                       std::span<FrameSource* const> streams,
                                       std::span<TraceSink* const> sinks, RunOptions options,
                                       std::size_t max_workers) {
  if (streams.empty()) throw ContractError("run_parallel: need at least one stream");
  if (!sinks.empty() && sinks.size() != streams.size())
    throw ContractError("run_parallel: sinks must be empty or match the stream count");
  config.validate();

  std::vector<WorkerResult> results(streams.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < streams.size(); i = next++) {
      try {
        results[i].outputs =
            run_stream(config, initial, *streams[i], sinks.empty() ? nullptr : sinks[i], options);
      } catch (const DivergenceError& e) {
        results[i].error = e.what();
        results[i].diverged = e.last_finite();
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
    }
  };

  const std::size_t workers =
      std::min(streams.size(), max_workers == 0 ? streams.size() : max_workers);
  if (workers <= 1) {
    worker();
    return results;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  pool.clear();  // joins
  return results;
}

}  // namespace evseg
