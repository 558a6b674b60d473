#pragma once

// Synthetic feature streams with known regime transitions, used as ground
// truth fixtures for the online segmenter.

#include "evseg/events.hpp"
#include "evseg/feature_stream.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace evseg {

/// Per-location Gaussian features: value = mean + drift * (t - start) + noise * N(0,1).
struct Regime {
  std::vector<float> mean;  // G*M, location-major
  float noise = 0.0f;
  float drift = 0.0f;  // per frame, added to every entry
};

struct Segment {
  std::uint64_t start = 0;  // inclusive
  std::uint64_t end = 0;    // exclusive
  Regime regime;
};

struct SyntheticScenario {
  std::uint32_t grid_side = 1;
  std::uint32_t feature_dim = 1;
  Rational fps;
  std::uint64_t seed = 0;
  // Length of the ground-truth interval emitted for each transition.
  std::uint64_t event_length = 1;
  std::vector<Segment> segments;

  std::uint64_t total_frames() const { return segments.empty() ? 0 : segments.back().end; }
  StreamHeader header() const;
  /// Throws ContractError unless segments are contiguous, non-empty and cover [0, T).
  void validate() const;
};

/// Regime whose per-location means are drawn from N(0, mean_scale^2) with `mean_seed`.
Regime random_regime(std::uint32_t grid_side, std::uint32_t feature_dim, std::uint64_t mean_seed,
                     float mean_scale, float noise, float drift = 0.0f);
/// Regime with every mean entry equal to `level`.
Regime constant_regime(std::uint32_t grid_side, std::uint32_t feature_dim, float level,
                       float noise = 0.0f, float drift = 0.0f);

/// Streams the scenario frame by frame without materializing it.
class SyntheticSource final : public FrameSource {
 public:
  explicit SyntheticSource(SyntheticScenario scenario);

  const StreamHeader& header() const override { return header_; }
  std::optional<FeatureFrame> next() override;

 private:
  SyntheticScenario scenario_;
  StreamHeader header_;
  std::mt19937_64 rng_;
  std::normal_distribution<float> unit_{0.0f, 1.0f};
  std::uint64_t t_ = 0;
  std::size_t segment_ = 0;
};

/// Ground-truth interval per regime transition. A transition into the segment
/// starting at frame b yields [b-1, b-1+event_length-1]: loss sample b-1 is the
/// first one whose target frame belongs to the new regime.
std::vector<EventInterval> transition_events(const SyntheticScenario& scenario);

struct SyntheticStream {
  std::unique_ptr<SyntheticSource> stream;
  std::vector<EventInterval> events;
};

/// Throws ContractError on an empty segment list or invalid scenario.
SyntheticStream generate_synthetic(const SyntheticScenario& scenario);

/// Materialized variant for small fixtures.
LoadedStream generate_frames(const SyntheticScenario& scenario);

/// Evenly spaced regimes: `boundaries + 1` segments of random means.
SyntheticScenario make_regime_scenario(std::uint32_t grid_side, std::uint32_t feature_dim,
                                       std::uint64_t total_frames, std::size_t boundaries,
                                       float mean_scale, float noise, Rational fps,
                                       std::uint64_t seed, std::uint64_t event_length);

/// YAML scenario documents; schema in docs/formats.md.
SyntheticScenario parse_scenario(const std::string& yaml_text);
SyntheticScenario load_scenario(const std::filesystem::path& path);

}  // namespace evseg
