#pragma once

// Error gate: turns a scalar loss signal into per-frame event decisions and
// merges positive frames into intervals.
//
// Adaptive smoothing subtracts a causal trailing mean of width n:
//   e_s(t) = e(t) - mean(e(max(0, t-n+1) .. t))
// evaluated as the mean of e(t) - e(k), so a constant window gives exactly 0.
// During warm-up (t < n-1) the mean covers the available history only.
// A frame is positive when the gated value is >= psi.

#include "evseg/events.hpp"
#include "evseg/losses.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace evseg {

enum class GateMode { Simple, Adaptive };

GateMode parse_gate_mode(std::string_view text);  // "simple" | "adaptive"
std::string_view to_string(GateMode mode);

struct GateConfig {
  GateMode mode = GateMode::Simple;
  double threshold = 0.0;      // psi
  std::size_t buffer = 64;     // m, retained history for the incremental gate
  std::size_t window = 16;     // n, smoothing width
  LossKind signal = LossKind::Prediction;

  /// Adaptive mode requires 1 <= n < m.
  void validate() const;
};

std::vector<double> smooth_adaptive(std::span<const double> signal, std::size_t window);

/// 1 where value >= threshold.
std::vector<std::uint8_t> gate(std::span<const double> values, double threshold);

/// Maximal runs of ones, merging runs separated by at most `join_window`
/// zero frames. When `score_signal` is non-empty, each interval's score is
/// the signal's peak inside it.
std::vector<EventInterval> extract_events(std::span<const std::uint8_t> binary,
                                          std::uint64_t join_window,
                                          std::span<const double> score_signal = {});

/// The values the gate thresholds: raw for simple mode, smoothed for adaptive.
std::vector<double> gated_signal(std::span<const double> raw, const GateConfig& config);

std::vector<EventInterval> detect_events(std::span<const double> raw, const GateConfig& config,
                                         std::uint64_t join_window);

std::vector<double> select_signal(std::span<const LossSample> trace, LossKind kind);

/// Frame indicator of a set of intervals over [0, total_frames).
std::vector<std::uint8_t> rasterize(std::span<const EventInterval> intervals,
                                    std::uint64_t total_frames);

/// Push-one-value, get-one-decision form of the gate for live streams.
/// Keeps at most `buffer` past values; results match the batch functions.
class IncrementalGate {
 public:
  explicit IncrementalGate(const GateConfig& config);

  struct Decision {
    double value;  // gated value (smoothed in adaptive mode)
    bool positive;
  };

  Decision push(double e);
  std::size_t retained() const { return count_; }

 private:
  GateConfig config_;
  std::vector<double> ring_;
  std::size_t head_ = 0;  // next write slot
  std::size_t count_ = 0;
};

/// Online interval builder: feed decisions in frame order, collect closed
/// intervals; call finish() at end of stream.
class IntervalBuilder {
 public:
  explicit IntervalBuilder(std::uint64_t join_window) : join_window_(join_window) {}

  /// Returns an interval once it can no longer grow.
  std::optional<EventInterval> push(std::uint64_t t, bool positive, double value);
  std::optional<EventInterval> finish();

 private:
  std::uint64_t join_window_;
  std::optional<EventInterval> open_;
};

}  // namespace evseg
