#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>

namespace evseg {

/// Closed frame interval [start_frame, end_frame], used for both ground
/// truth annotations and detections.
struct EventInterval {
  std::uint64_t start_frame = 0;
  std::uint64_t end_frame = 0;
  std::string label;
  std::optional<double> score;  // peak gated signal inside the interval

  std::uint64_t length() const { return end_frame - start_frame + 1; }
  bool operator==(const EventInterval&) const = default;
};

/// Number of frames shared by two intervals (0 when disjoint).
inline std::uint64_t overlap(const EventInterval& a, const EventInterval& b) {
  const auto lo = std::max(a.start_frame, b.start_frame);
  const auto hi = std::min(a.end_frame, b.end_frame);
  return hi >= lo ? hi - lo + 1 : 0;
}

}  // namespace evseg
