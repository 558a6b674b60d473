#include "evseg/evaluation.hpp"

#include "evseg/errors.hpp"
#include "evseg/hungarian.hpp"
#include "evseg/traces.hpp"

#include <algorithm>
#include <ostream>

namespace evseg {

FrameMetrics frame_level(std::span<const std::uint8_t> detected, const AnnotationSet& truth) {
  if (detected.size() != truth.total_frames)
    throw ContractError("frame_level: detection length " + std::to_string(detected.size()) +
                        " != total frames " + std::to_string(truth.total_frames));
  const auto positive = rasterize(truth.intervals, truth.total_frames);
  FrameMetrics m;
  for (std::size_t t = 0; t < detected.size(); ++t) {
    const bool d = detected[t] != 0;
    if (positive[t]) {
      d ? ++m.tp : ++m.fn;
    } else {
      d ? ++m.fp : ++m.tn;
    }
  }
  if (m.tp + m.fn > 0) m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  if (m.fp + m.tn > 0) m.fpr = static_cast<double>(m.fp) / static_cast<double>(m.fp + m.tn);
  return m;
}

std::vector<Match> hungarian_match(std::span<const EventInterval> gt,
                                   std::span<const EventInterval> det, MatchOptions options) {
  if (gt.empty() || det.empty()) return {};
  std::vector<std::vector<std::uint64_t>> ov(gt.size(), std::vector<std::uint64_t>(det.size()));
  std::int64_t total = 0;
  bool any = false;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    for (std::size_t j = 0; j < det.size(); ++j) {
      const auto o = overlap(gt[i], det[j]);
      const bool eligible =
          o > 0 && static_cast<double>(o) >=
                       options.min_overlap_fraction * static_cast<double>(gt[i].length());
      ov[i][j] = eligible ? o : 0;
      total += static_cast<std::int64_t>(ov[i][j]);
      any = any || eligible;
    }
  }
  if (!any) return {};

  // Each eligible pair is worth more than all overlaps combined, so the
  // minimum-cost assignment maximizes the pair count first, then overlap.
  const std::int64_t pair_bonus = total + 1;
  std::vector<std::vector<std::int64_t>> cost(gt.size(), std::vector<std::int64_t>(det.size(), 0));
  for (std::size_t i = 0; i < gt.size(); ++i)
    for (std::size_t j = 0; j < det.size(); ++j)
      if (ov[i][j] > 0) cost[i][j] = -(pair_bonus + static_cast<std::int64_t>(ov[i][j]));

  const auto assignment = solve_assignment(cost);
  std::vector<Match> out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] < 0) continue;
    const auto j = static_cast<std::size_t>(assignment[i]);
    if (ov[i][j] > 0) out.push_back({i, j, ov[i][j]});
  }
  return out;
}

ActivityMetrics activity_level(std::span<const EventInterval> gt, std::span<const EventInterval> det,
                               double duration_minutes, MatchOptions options) {
  if (!(duration_minutes > 0.0)) throw ContractError("activity_level: duration must be > 0");
  ActivityMetrics m;
  m.gt_total = gt.size();
  m.det_total = det.size();
  m.matched = hungarian_match(gt, det, options).size();
  if (m.gt_total > 0) m.recall = static_cast<double>(m.matched) / static_cast<double>(m.gt_total);
  m.fp_per_min = static_cast<double>(m.det_total - m.matched) / duration_minutes;
  return m;
}

std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> per_label_recall(
    std::span<const EventInterval> gt, std::span<const Match> matching) {
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> out;
  for (const auto& e : gt) ++out[e.label].second;
  for (const auto& m : matching) ++out[gt[m.gt].label].first;
  return out;
}

std::vector<DetectionSet> sweep_detections(std::span<const double> signal, const GateGrid& grid) {
  if (grid.thresholds.empty() || grid.join_windows.empty())
    throw ContractError("roc sweep: grid needs at least one psi and one phi");
  GateConfig cfg;
  cfg.mode = grid.mode;
  cfg.window = grid.window;
  cfg.buffer = grid.buffer;
  const auto values = gated_signal(signal, cfg);

  std::vector<DetectionSet> out;
  for (double psi : grid.thresholds) {
    const auto binary = gate(values, psi);
    for (auto phi : grid.join_windows) out.push_back({psi, phi, extract_events(binary, phi, values)});
  }
  return out;
}

RocTables evaluate_detections(std::span<const DetectionSet> sets, const AnnotationSet& truth,
                              MatchOptions options) {
  truth.validate();
  RocTables tables;
  const double minutes = truth.duration_minutes();
  for (const auto& s : sets) {
    GridPoint p{s.threshold, s.join_window, {}, {}};
    p.frame = frame_level(rasterize(s.events, truth.total_frames), truth);
    p.activity = activity_level(truth.intervals, s.events, minutes, options);
    tables.points.push_back(p);
  }

  auto curve_for = [](std::vector<RocCurve>& curves, double fixed) -> RocCurve& {
    for (auto& c : curves)
      if (c.fixed == fixed) return c;
    curves.push_back({fixed, {}});
    return curves.back();
  };
  for (const auto& p : tables.points) {
    curve_for(tables.frame_curves, static_cast<double>(p.join_window))
        .rows.push_back({p.threshold, p.frame.recall, p.frame.fpr});
    curve_for(tables.activity_curves, p.threshold)
        .rows.push_back({static_cast<double>(p.join_window), p.activity.recall, p.activity.fp_per_min});
  }
  return tables;
}

RocTables roc_sweep(std::span<const double> signal, const AnnotationSet& truth, const GateGrid& grid,
                    MatchOptions options) {
  const auto sets = sweep_detections(signal, grid);
  return evaluate_detections(sets, truth, options);
}

const GridPoint& best_activity_point(std::span<const GridPoint> points) {
  if (points.empty()) throw ContractError("best_activity_point: no points");
  const GridPoint* best = &points.front();
  for (const auto& p : points) {
    if (p.activity.recall > best->activity.recall ||
        (p.activity.recall == best->activity.recall &&
         p.activity.fp_per_min < best->activity.fp_per_min))
      best = &p;
  }
  return *best;
}

void write_roc_csv(std::ostream& out, const RocCurve& curve) {
  out << "param,recall,fpr_or_fpm\n";
  for (const auto& r : curve.rows)
    out << format_real(r.param) << ',' << format_real(r.recall) << ',' << format_real(r.x) << '\n';
}

}  // namespace evseg
