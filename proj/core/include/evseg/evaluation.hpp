#pragma once

// Scoring of detections against ground truth.
//
// Frame level: confusion counts of the detection indicator against the union
// of annotated intervals. Activity level: one-to-one matching of annotated
// and detected intervals (any shared frame makes a pair eligible), recall
// against false detections per minute of footage. Labels are collapsed to a
// single event class for scoring.

#include "evseg/annotations.hpp"
#include "evseg/events.hpp"
#include "evseg/gating.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace evseg {

struct FrameMetrics {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  double recall = 0.0;  // 0 when there are no positive frames
  double fpr = 0.0;     // 0 when there are no negative frames
};

FrameMetrics frame_level(std::span<const std::uint8_t> detected, const AnnotationSet& truth);

struct MatchOptions {
  // Minimum overlap as a fraction of the annotated interval's length; a pair
  // always needs at least one shared frame.
  double min_overlap_fraction = 0.0;
};

struct Match {
  std::size_t gt;
  std::size_t det;
  std::uint64_t overlap;
  bool operator==(const Match&) const = default;
};

/// Maximum-cardinality one-to-one matching; among those, maximum total overlap.
std::vector<Match> hungarian_match(std::span<const EventInterval> gt,
                                   std::span<const EventInterval> det, MatchOptions options = {});

struct ActivityMetrics {
  std::uint64_t matched = 0;
  std::uint64_t gt_total = 0;
  std::uint64_t det_total = 0;
  double recall = 0.0;
  double fp_per_min = 0.0;
};

/// Throws ContractError unless duration_minutes > 0.
ActivityMetrics activity_level(std::span<const EventInterval> gt, std::span<const EventInterval> det,
                               double duration_minutes, MatchOptions options = {});

/// Informational per-label recall (matched / annotated) from one matching.
std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> per_label_recall(
    std::span<const EventInterval> gt, std::span<const Match> matching);

/// Detections produced at one (psi, phi) grid point.
struct DetectionSet {
  double threshold = 0.0;         // psi
  std::uint64_t join_window = 0;  // phi
  std::vector<EventInterval> events;
};

struct GridPoint {
  double threshold = 0.0;
  std::uint64_t join_window = 0;
  FrameMetrics frame;
  ActivityMetrics activity;
};

struct RocRow {
  double param = 0.0;
  double recall = 0.0;
  double x = 0.0;  // fpr (frame level) or FP/min (activity level)
};

struct RocCurve {
  double fixed = 0.0;  // phi for frame curves, psi for activity curves
  std::vector<RocRow> rows;
};

struct RocTables {
  std::vector<GridPoint> points;
  std::vector<RocCurve> frame_curves;     // one per phi, rows over psi
  std::vector<RocCurve> activity_curves;  // one per psi, rows over phi
};

struct GateGrid {
  GateMode mode = GateMode::Simple;
  std::size_t window = 16;
  std::size_t buffer = 64;
  std::vector<double> thresholds;
  std::vector<std::uint64_t> join_windows;
};

/// Gates the signal at every grid point (in grid order) and collects detections.
std::vector<DetectionSet> sweep_detections(std::span<const double> signal, const GateGrid& grid);

RocTables evaluate_detections(std::span<const DetectionSet> sets, const AnnotationSet& truth,
                              MatchOptions options = {});

/// sweep_detections followed by evaluate_detections. Throws ContractError on an empty grid.
RocTables roc_sweep(std::span<const double> signal, const AnnotationSet& truth,
                    const GateGrid& grid, MatchOptions options = {});

/// Highest activity recall, ties broken by fewer FP/min, then by grid order.
const GridPoint& best_activity_point(std::span<const GridPoint> points);

/// CSV `param,recall,fpr_or_fpm`.
void write_roc_csv(std::ostream& out, const RocCurve& curve);

}  // namespace evseg
