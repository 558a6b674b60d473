#include "evseg/annotations.hpp"
#include "evseg/errors.hpp"
#include "evseg/evaluation.hpp"
#include "evseg/hungarian.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace evseg {
namespace {

AnnotationSet truth(std::vector<EventInterval> iv, std::uint64_t frames, Rational fps = {1, 1}) {
  AnnotationSet a;
  a.intervals = std::move(iv);
  a.total_frames = frames;
  a.fps = fps;
  return a;
}

TEST(FrameLevel, ToyCase) {
  const auto gt = truth({{2, 5, "x"}}, 10);
  std::vector<std::uint8_t> det(10, 0);
  det[3] = det[4] = det[7] = 1;
  const auto m = frame_level(det, gt);
  EXPECT_EQ(m.tp, 2u);
  EXPECT_EQ(m.fn, 2u);
  EXPECT_EQ(m.fp, 1u);
  EXPECT_EQ(m.tn, 5u);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_DOUBLE_EQ(m.fpr, 1.0 / 6.0);
}

TEST(FrameLevel, PerfectAndEmptyDetections) {
  const auto gt = truth({{2, 5, ""}, {8, 8, ""}}, 12);
  const auto perfect = frame_level(rasterize(gt.intervals, 12), gt);
  EXPECT_EQ(perfect.recall, 1.0);
  EXPECT_EQ(perfect.fpr, 0.0);
  const auto none = frame_level(std::vector<std::uint8_t>(12, 0), gt);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.fpr, 0.0);
  EXPECT_EQ(none.tp + none.fp + none.tn + none.fn, 12u);
  EXPECT_THROW(frame_level(std::vector<std::uint8_t>(11, 0), gt), ContractError);
}

TEST(Hungarian, SolvesSmallSquareAndRectangular) {
  const std::vector<std::vector<std::int64_t>> c = {{4, 1, 3}, {2, 0, 5}, {3, 2, 2}};
  EXPECT_EQ(solve_assignment(c), (std::vector<std::ptrdiff_t>{1, 0, 2}));
  const std::vector<std::vector<std::int64_t>> wide = {{5, 1, 9, 9}};
  EXPECT_EQ(solve_assignment(wide), (std::vector<std::ptrdiff_t>{1}));
  const std::vector<std::vector<std::int64_t>> tall = {{5}, {1}, {3}};
  EXPECT_EQ(solve_assignment(tall), (std::vector<std::ptrdiff_t>{-1, 0, -1}));
  EXPECT_TRUE(solve_assignment({}).empty());
}

TEST(Matching, DisjointAndIdentical) {
  const std::vector<EventInterval> a = {{0, 3, ""}, {10, 12, ""}}, b = {{5, 8, ""}, {20, 25, ""}};
  EXPECT_TRUE(hungarian_match(a, b).empty());
  const auto m = hungarian_match(a, a);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0], (Match{0, 0, 4}));
  EXPECT_EQ(m[1], (Match{1, 1, 3}));
}

TEST(Matching, PrefersMoreMatchesOverMoreOverlap) {
  // gt0 overlaps both detections heavily; gt1 only touches det0.
  const std::vector<EventInterval> gt = {{0, 20, ""}, {21, 21, ""}};
  const std::vector<EventInterval> det = {{10, 21, ""}, {0, 5, ""}};
  const auto m = hungarian_match(gt, det);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0], (Match{0, 1, 6}));
  EXPECT_EQ(m[1], (Match{1, 0, 1}));
}

TEST(Matching, AgreesWithExhaustiveSearch) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> size(0, 7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto gt = oracle::random_intervals(size(rng), 80, 15, rng);
    const auto det = oracle::random_intervals(size(rng), 80, 15, rng);
    const auto m = hungarian_match(gt, det);
    const auto best = oracle::brute_force_match(gt, det);
    std::uint64_t total = 0;
    std::vector<char> used_gt(gt.size(), 0), used_det(det.size(), 0);
    for (const auto& p : m) {
      EXPECT_EQ(p.overlap, overlap(gt[p.gt], det[p.det]));
      EXPECT_GT(p.overlap, 0u);
      EXPECT_FALSE(used_gt[p.gt]++);
      EXPECT_FALSE(used_det[p.det]++);
      total += p.overlap;
    }
    EXPECT_EQ(m.size(), best.pairs) << "trial " << trial;
    EXPECT_EQ(total, best.overlap) << "trial " << trial;
    EXPECT_EQ(hungarian_match(det, gt).size(), m.size());
  }
}

TEST(Matching, MinimumOverlapFraction) {
  const std::vector<EventInterval> gt = {{0, 9, ""}}, det = {{8, 20, ""}};
  EXPECT_EQ(hungarian_match(gt, det).size(), 1u);
  EXPECT_TRUE(hungarian_match(gt, det, {0.5}).empty());
}

TEST(ActivityLevel, Examples) {
  const std::vector<EventInterval> gt = {{0, 9, ""}, {100, 109, ""}};
  const auto same = activity_level(gt, gt, 10.0);
  EXPECT_EQ(same.recall, 1.0);
  EXPECT_EQ(same.fp_per_min, 0.0);

  const std::vector<EventInterval> det = {{5, 6, ""}, {105, 120, ""}, {500, 510, ""}};
  const auto m = activity_level(gt, det, 100.0);
  EXPECT_EQ(m.matched, 2u);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_DOUBLE_EQ(m.fp_per_min, 0.01);

  const auto none = activity_level(gt, {}, 5.0);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.fp_per_min, 0.0);
  EXPECT_THROW(activity_level(gt, det, 0.0), ContractError);
}

TEST(ActivityLevel, PerLabelBreakdown) {
  const std::vector<EventInterval> gt = {{0, 3, "feed"}, {10, 12, "walk"}, {20, 22, "feed"}};
  const std::vector<EventInterval> det = {{1, 2, ""}, {21, 30, ""}};
  const auto m = hungarian_match(gt, det);
  const auto per = per_label_recall(gt, m);
  EXPECT_EQ(per.at("feed"), (std::pair<std::uint64_t, std::uint64_t>{2, 2}));
  EXPECT_EQ(per.at("walk"), (std::pair<std::uint64_t, std::uint64_t>{0, 1}));
}

TEST(RocSweep, SinglePointAndEmptyGrid) {
  const std::vector<double> signal = {0, 0, 5, 5, 0, 0};
  const auto gt = truth({{2, 3, ""}}, 6);
  GateGrid grid{GateMode::Simple, 2, 4, {1.0}, {0}};
  const auto r = roc_sweep(signal, gt, grid);
  ASSERT_EQ(r.points.size(), 1u);
  ASSERT_EQ(r.frame_curves.size(), 1u);
  ASSERT_EQ(r.frame_curves[0].rows.size(), 1u);
  ASSERT_EQ(r.activity_curves.size(), 1u);
  EXPECT_EQ(r.frame_curves[0].rows[0].recall, 1.0);
  EXPECT_EQ(r.frame_curves[0].rows[0].x, 0.0);
  grid.thresholds.clear();
  EXPECT_THROW(roc_sweep(signal, gt, grid), ContractError);
}

TEST(RocSweep, RecallGrowsAsThresholdFallsAndSeparableTraceIsPerfect) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> low(0.0, 1.0), high(2.0, 3.0);
  const std::uint64_t frames = 600;
  const auto gt = truth({{100, 120, ""}, {300, 330, ""}, {500, 505, ""}}, frames, {30, 1});
  const auto ind = rasterize(gt.intervals, frames);
  std::vector<double> signal(frames);
  for (std::size_t t = 0; t < frames; ++t) signal[t] = ind[t] ? high(rng) : low(rng);

  GateGrid grid{GateMode::Simple, 4, 8, {}, {0, 2, 8}};
  for (double psi = 3.0; psi >= 0.0; psi -= 0.25) grid.thresholds.push_back(psi);
  const auto r = roc_sweep(signal, gt, grid);
  EXPECT_EQ(r.points.size(), grid.thresholds.size() * grid.join_windows.size());
  ASSERT_EQ(r.frame_curves.size(), 3u);
  ASSERT_EQ(r.activity_curves.size(), grid.thresholds.size());
  for (const auto& curve : r.frame_curves) {
    for (std::size_t i = 1; i < curve.rows.size(); ++i) {
      EXPECT_LT(curve.rows[i].param, curve.rows[i - 1].param);
      EXPECT_GE(curve.rows[i].recall, curve.rows[i - 1].recall);
    }
  }
  bool perfect = false;
  for (const auto& p : r.points) perfect |= p.frame.recall == 1.0 && p.frame.fpr == 0.0;
  EXPECT_TRUE(perfect);
  const auto& best = best_activity_point(r.points);
  EXPECT_EQ(best.activity.recall, 1.0);
  EXPECT_EQ(best.activity.fp_per_min, 0.0);

  std::ostringstream csv;
  write_roc_csv(csv, r.frame_curves[0]);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "param,recall,fpr_or_fpm");
}

TEST(Annotations, ReadsIntervalsAndInstants) {
  std::istringstream in("start_frame,end_frame,label\n10,20,feeding\n40,,walk in\n0,0,\n");
  const auto a = read_annotations(in, 100, {30, 1}, {3});
  ASSERT_EQ(a.intervals.size(), 3u);
  EXPECT_EQ(a.intervals[0], (EventInterval{10, 20, "feeding", {}}));
  EXPECT_EQ(a.intervals[1], (EventInterval{37, 43, "walk in", {}}));
  EXPECT_EQ(a.intervals[2].end_frame, 0u);
  EXPECT_NEAR(a.duration_minutes(), 100.0 / 30.0 / 60.0, 1e-15);
}

TEST(Annotations, RejectsBadRows) {
  std::istringstream no_header("10,20,x\n");
  EXPECT_THROW(read_annotations(no_header, 100, {1, 1}), FormatError);
  std::istringstream reversed("start_frame,end_frame,label\n20,10,x\n");
  EXPECT_ANY_THROW(read_annotations(reversed, 100, {1, 1}));
  std::istringstream outside("start_frame,end_frame,label\n90,100,x\n");
  EXPECT_THROW(read_annotations(outside, 100, {1, 1}), ContractError);
}

TEST(Detections, RoundTrip) {
  const std::vector<EventInterval> ev = {{3, 8, "", 12.5}, {20, 20, "", 0.1}};
  std::stringstream io;
  write_detections(io, ev);
  EXPECT_EQ(read_detections(io), ev);
}

}  // namespace
}  // namespace evseg
