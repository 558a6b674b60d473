#include "evseg/gating.hpp"

#include "evseg/errors.hpp"

#include <algorithm>
#include <string>

namespace evseg {

GateMode parse_gate_mode(std::string_view text) {
  if (text == "simple") return GateMode::Simple;
  if (text == "adaptive") return GateMode::Adaptive;
  throw ContractError("unknown gate '" + std::string(text) + "' (expected simple|adaptive)");
}

std::string_view to_string(GateMode mode) {
  return mode == GateMode::Simple ? "simple" : "adaptive";
}

void GateConfig::validate() const {
  if (mode == GateMode::Adaptive && !(window >= 1 && window < buffer))
    throw ContractError("gate: adaptive mode needs 1 <= n < m (n=" + std::to_string(window) +
                        ", m=" + std::to_string(buffer) + ")");
}

std::vector<double> smooth_adaptive(std::span<const double> signal, std::size_t window) {
  if (window < 1) throw ContractError("smooth_adaptive: window must be >= 1");
  std::vector<double> out(signal.size());
  for (std::size_t t = 0; t < signal.size(); ++t) {
    const std::size_t first = t + 1 >= window ? t + 1 - window : 0;
    // sum of differences, oldest first: exactly 0 on a constant window
    double sum = 0.0;
    for (std::size_t k = first; k <= t; ++k) sum += signal[t] - signal[k];
    out[t] = sum / static_cast<double>(t - first + 1);
  }
  return out;
}

std::vector<std::uint8_t> gate(std::span<const double> values, double threshold) {
  std::vector<std::uint8_t> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(),
                 [threshold](double v) { return static_cast<std::uint8_t>(v >= threshold); });
  return out;
}

std::vector<EventInterval> extract_events(std::span<const std::uint8_t> binary,
                                          std::uint64_t join_window,
                                          std::span<const double> score_signal) {
  if (!score_signal.empty() && score_signal.size() != binary.size())
    throw ContractError("extract_events: score signal length mismatch");
  IntervalBuilder builder(join_window);
  std::vector<EventInterval> out;
  for (std::size_t t = 0; t < binary.size(); ++t) {
    const double v = score_signal.empty() ? 0.0 : score_signal[t];
    if (auto e = builder.push(t, binary[t] != 0, v)) out.push_back(std::move(*e));
  }
  if (auto e = builder.finish()) out.push_back(std::move(*e));
  if (score_signal.empty())
    for (auto& e : out) e.score.reset();
  return out;
}

std::vector<double> gated_signal(std::span<const double> raw, const GateConfig& config) {
  config.validate();
  if (config.mode == GateMode::Simple) return {raw.begin(), raw.end()};
  return smooth_adaptive(raw, config.window);
}

std::vector<EventInterval> detect_events(std::span<const double> raw, const GateConfig& config,
                                         std::uint64_t join_window) {
  const auto values = gated_signal(raw, config);
  return extract_events(gate(values, config.threshold), join_window, values);
}

std::vector<double> select_signal(std::span<const LossSample> trace, LossKind kind) {
  std::vector<double> out(trace.size());
  std::transform(trace.begin(), trace.end(), out.begin(),
                 [kind](const LossSample& s) { return s.value(kind); });
  return out;
}

std::vector<std::uint8_t> rasterize(std::span<const EventInterval> intervals,
                                    std::uint64_t total_frames) {
  std::vector<std::uint8_t> out(total_frames, 0);
  for (const auto& e : intervals) {
    if (e.start_frame >= total_frames) continue;
    const auto last = std::min(e.end_frame, total_frames - 1);
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(e.start_frame),
              out.begin() + static_cast<std::ptrdiff_t>(last) + 1, std::uint8_t{1});
  }
  return out;
}

IncrementalGate::IncrementalGate(const GateConfig& config) : config_(config) {
  config_.validate();
  ring_.assign(config_.mode == GateMode::Adaptive ? config_.buffer : 1, 0.0);
}

IncrementalGate::Decision IncrementalGate::push(double e) {
  ring_[head_] = e;
  head_ = (head_ + 1) % ring_.size();
  count_ = std::min(count_ + 1, ring_.size());
  double value = e;
  if (config_.mode == GateMode::Adaptive) {
    const std::size_t used = std::min(count_, config_.window);
    // oldest-first, matching smooth_adaptive's summation order
    double sum = 0.0;
    for (std::size_t k = used; k >= 1; --k) sum += e - ring_[(head_ + ring_.size() - k) % ring_.size()];
    value = sum / static_cast<double>(used);
  }
  return {value, value >= config_.threshold};
}

std::optional<EventInterval> IntervalBuilder::push(std::uint64_t t, bool positive, double value) {
  std::optional<EventInterval> closed;
  // more than join_window zero frames since the last positive: final
  if (open_ && t - open_->end_frame - 1 > join_window_) closed = std::exchange(open_, std::nullopt);
  if (!positive) return closed;
  if (open_) {
    open_->end_frame = t;
    open_->score = std::max(*open_->score, value);
  } else {
    open_ = EventInterval{t, t, {}, value};
  }
  return closed;
}

std::optional<EventInterval> IntervalBuilder::finish() { return std::exchange(open_, std::nullopt); }

}  // namespace evseg
