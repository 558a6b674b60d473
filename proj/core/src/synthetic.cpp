#include "evseg/synthetic.hpp"

#include "evseg/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <sstream>

namespace evseg {

StreamHeader SyntheticScenario::header() const {
  StreamHeader h;
  h.grid_side = grid_side;
  h.feature_dim = feature_dim;
  h.frame_count = total_frames();
  h.fps = fps;
  return h;
}

void SyntheticScenario::validate() const {
  if (segments.empty()) throw ContractError("scenario has no segments");
  if (grid_side < 1 || feature_dim < 1) throw ContractError("scenario: N and M must be >= 1");
  if (fps.num == 0 || fps.den == 0) throw ContractError("scenario: fps must be > 0");
  if (event_length < 1) throw ContractError("scenario: event_length must be >= 1");
  const std::size_t values = std::size_t{grid_side} * grid_side * feature_dim;
  std::uint64_t expected_start = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (s.start != expected_start)
      throw ContractError("scenario: segment " + std::to_string(i) + " starts at " +
                          std::to_string(s.start) + ", expected " + std::to_string(expected_start));
    if (s.end <= s.start) throw ContractError("scenario: segment " + std::to_string(i) + " is empty");
    if (s.regime.mean.size() != values)
      throw ContractError("scenario: segment " + std::to_string(i) + " mean has " +
                          std::to_string(s.regime.mean.size()) + " entries, expected " +
                          std::to_string(values));
    if (s.regime.noise < 0.0f) throw ContractError("scenario: negative noise");
    expected_start = s.end;
  }
}

Regime random_regime(std::uint32_t grid_side, std::uint32_t feature_dim, std::uint64_t mean_seed,
                     float mean_scale, float noise, float drift) {
  std::mt19937_64 rng(mean_seed);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  Regime r;
  r.mean.resize(std::size_t{grid_side} * grid_side * feature_dim);
  for (auto& v : r.mean) v = mean_scale * dist(rng);
  r.noise = noise;
  r.drift = drift;
  return r;
}

Regime constant_regime(std::uint32_t grid_side, std::uint32_t feature_dim, float level,
                       float noise, float drift) {
  return Regime{std::vector<float>(std::size_t{grid_side} * grid_side * feature_dim, level), noise,
                drift};
}

SyntheticSource::SyntheticSource(SyntheticScenario scenario)
    : scenario_(std::move(scenario)), rng_(scenario_.seed) {
  scenario_.validate();
  header_ = scenario_.header();
}

std::optional<FeatureFrame> SyntheticSource::next() {
  if (t_ >= scenario_.total_frames()) return std::nullopt;
  while (t_ >= scenario_.segments[segment_].end) ++segment_;
  const auto& seg = scenario_.segments[segment_];
  const float offset = seg.regime.drift * static_cast<float>(t_ - seg.start);
  FeatureFrame frame{t_, seg.regime.mean};
  for (auto& v : frame.values) {
    v += offset;
    if (seg.regime.noise > 0.0f) v += seg.regime.noise * unit_(rng_);
  }
  ++t_;
  return frame;
}

std::vector<EventInterval> transition_events(const SyntheticScenario& scenario) {
  std::vector<EventInterval> events;
  const auto last = scenario.total_frames() - 1;
  for (std::size_t i = 1; i < scenario.segments.size(); ++i) {
    const auto b = scenario.segments[i].start;
    EventInterval e;
    e.start_frame = b - 1;
    e.end_frame = std::min(last, b - 1 + scenario.event_length - 1);
    e.label = "transition_" + std::to_string(i);
    events.push_back(std::move(e));
  }
  return events;
}

SyntheticStream generate_synthetic(const SyntheticScenario& scenario) {
  scenario.validate();
  return {std::make_unique<SyntheticSource>(scenario), transition_events(scenario)};
}

LoadedStream generate_frames(const SyntheticScenario& scenario) {
  SyntheticSource src(scenario);
  LoadedStream out{src.header(), {}};
  out.frames.reserve(scenario.total_frames());
  while (auto f = src.next()) out.frames.push_back(std::move(*f));
  return out;
}

SyntheticScenario make_regime_scenario(std::uint32_t grid_side, std::uint32_t feature_dim,
                                       std::uint64_t total_frames, std::size_t boundaries,
                                       float mean_scale, float noise, Rational fps,
                                       std::uint64_t seed, std::uint64_t event_length) {
  if (total_frames < boundaries + 1) throw ContractError("too few frames for the boundaries");
  SyntheticScenario s;
  s.grid_side = grid_side;
  s.feature_dim = feature_dim;
  s.fps = fps;
  s.seed = seed;
  s.event_length = event_length;
  const std::size_t count = boundaries + 1;
  for (std::size_t i = 0; i < count; ++i) {
    Segment seg;
    seg.start = total_frames * i / count;
    seg.end = total_frames * (i + 1) / count;
    seg.regime = random_regime(grid_side, feature_dim, seed * 7919 + i + 1, mean_scale, noise);
    s.segments.push_back(std::move(seg));
  }
  return s;
}

namespace {

template <class T>
T get_or(const YAML::Node& node, const char* key, T fallback) {
  return node[key] ? node[key].as<T>() : fallback;
}

SyntheticScenario from_yaml(const YAML::Node& root) {
  if (!root.IsMap()) throw FormatError("scenario: top level must be a mapping");
  SyntheticScenario s;
  for (const char* key : {"grid_side", "feature_dim", "fps", "segments"})
    if (!root[key]) throw FormatError(std::string("scenario: missing key '") + key + "'");
  s.grid_side = root["grid_side"].as<std::uint32_t>();
  s.feature_dim = root["feature_dim"].as<std::uint32_t>();
  s.fps = parse_rational(root["fps"].as<std::string>());
  s.seed = get_or<std::uint64_t>(root, "seed", 0);
  s.event_length = get_or<std::uint64_t>(root, "event_length", 1);

  const auto segs = root["segments"];
  if (!segs.IsSequence()) throw FormatError("scenario: 'segments' must be a list");
  std::uint64_t start = 0;
  std::size_t i = 0;
  for (const auto& node : segs) {
    if (!node["length"]) throw FormatError("scenario: segment " + std::to_string(i) + " lacks 'length'");
    Segment seg;
    seg.start = start;
    seg.end = start + node["length"].as<std::uint64_t>();
    const auto noise = get_or<float>(node, "noise", 0.0f);
    const auto drift = get_or<float>(node, "drift", 0.0f);
    if (node["mean"]) {
      seg.regime = constant_regime(s.grid_side, s.feature_dim, node["mean"].as<float>(), noise, drift);
    } else {
      seg.regime = random_regime(s.grid_side, s.feature_dim,
                                 get_or<std::uint64_t>(node, "mean_seed", i + 1),
                                 get_or<float>(node, "mean_scale", 1.0f), noise, drift);
    }
    start = seg.end;
    s.segments.push_back(std::move(seg));
    ++i;
  }
  s.validate();
  return s;
}

}  // namespace

SyntheticScenario parse_scenario(const std::string& yaml_text) {
  try {
    return from_yaml(YAML::Load(yaml_text));
  } catch (const YAML::Exception& e) {
    throw FormatError(std::string("scenario: ") + e.what());
  }
}

SyntheticScenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace evseg
