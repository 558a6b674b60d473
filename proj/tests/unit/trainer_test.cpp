#include "evseg/errors.hpp"
#include "evseg/synthetic.hpp"
#include "evseg/trainer.hpp"

#include "model_compare.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

namespace evseg {
namespace {

ModelConfig small_model(std::uint32_t n = 2, std::uint32_t m = 4) {
  ModelConfig c;
  c.grid_side = n;
  c.feature_dim = m;
  return c;
}

TrainerConfig fast_trainer(double lr = 1e-3) {
  TrainerConfig t;
  t.adam.learning_rate = lr;
  t.seed = 5;
  return t;
}

SyntheticScenario constant_scenario(std::uint64_t frames, std::uint32_t n = 2, std::uint32_t m = 4) {
  SyntheticScenario s;
  s.grid_side = n;
  s.feature_dim = m;
  s.fps = {5, 1};
  s.segments.push_back({0, frames, random_regime(n, m, 3, 1.0f, 0.0f)});
  return s;
}

double window_mean(const std::vector<LossSample>& l, std::size_t begin, std::size_t count) {
  double sum = 0.0;
  for (std::size_t i = begin; i < begin + count; ++i) sum += l[i].pred_loss;
  return sum / static_cast<double>(count);
}

TEST(Trainer, LearnsAConstantStream) {
  SyntheticSource src(constant_scenario(501));
  const auto out = run_stream(fast_trainer(1e-2), init_model(small_model(), 1), src);
  ASSERT_EQ(out.losses.size(), 500u);
  for (std::size_t w = 1; w < 5; ++w)
    EXPECT_LE(window_mean(out.losses, w * 100, 100), window_mean(out.losses, (w - 1) * 100, 100))
        << "window " << w;
  EXPECT_LT(window_mean(out.losses, 400, 100), 0.1 * window_mean(out.losses, 0, 100));
}

TEST(Trainer, ZeroLearningRateKeepsParameters) {
  const Model initial = init_model(small_model(), 2);
  auto scenario = make_regime_scenario(2, 4, 50, 1, 1.0f, 0.2f, {5, 1}, 4, 1);
  SyntheticSource src(scenario);
  const auto out = run_stream(fast_trainer(0.0), initial, src);
  EXPECT_TRUE(oracle::bit_equal(out.final_model.attention.value, initial.attention.value));
  EXPECT_TRUE(oracle::bit_equal(out.final_model.predictor.value, initial.predictor.value));
  EXPECT_EQ(out.final_model.adam_step, 49u);
}

TEST(Trainer, RegimeChangeSpikesTheLoss) {
  auto scenario = make_regime_scenario(2, 8, 600, 1, 1.0f, 0.05f, {5, 1}, 11, 1);
  const auto boundary = scenario.segments[1].start;
  SyntheticSource src(scenario);
  const auto out = run_stream(fast_trainer(), init_model(small_model(2, 8), 3), src);
  std::vector<double> before;
  for (auto t = boundary - 201; t < boundary - 1; ++t) before.push_back(out.losses[t].pred_loss);
  std::nth_element(before.begin(), before.begin() + 100, before.end());
  double spike = 0.0;
  for (auto t = boundary - 1; t < boundary + 4; ++t) spike = std::max(spike, out.losses[t].pred_loss);
  EXPECT_GT(spike, before[100]);
}

TEST(Trainer, RunsAreBitReproducible) {
  auto scenario = make_regime_scenario(2, 4, 200, 2, 1.0f, 0.3f, {5, 1}, 8, 1);
  TrainerConfig cfg = fast_trainer();
  cfg.bptt_window = 3;
  SyntheticSource a(scenario), b(scenario);
  RunOptions opts{true, true};
  const auto ra = run_stream(cfg, init_model(small_model(), 6), a, nullptr, opts);
  const auto rb = run_stream(cfg, init_model(small_model(), 6), b, nullptr, opts);
  EXPECT_EQ(ra.losses, rb.losses);
  ASSERT_EQ(ra.attention.size(), rb.attention.size());
  for (std::size_t i = 0; i < ra.attention.size(); ++i)
    EXPECT_TRUE(oracle::bit_equal(Matrix(ra.attention[i].weights), Matrix(rb.attention[i].weights)));
  EXPECT_TRUE(oracle::models_bit_equal(ra.final_model, rb.final_model));
}

// Counts frames handed out and checks each loss arrives before frame t+2 is requested.
class CountingSource final : public FrameSource {
 public:
  explicit CountingSource(FrameSource& inner) : inner_(inner) {}
  const StreamHeader& header() const override { return inner_.header(); }
  std::optional<FeatureFrame> next() override {
    auto f = inner_.next();
    if (f) ++served;
    return f;
  }
  std::uint64_t served = 0;

 private:
  FrameSource& inner_;
};

struct OrderingSink final : TraceSink {
  const CountingSource* source = nullptr;
  std::uint64_t expected_t = 0;
  bool attention_first = false;
  std::vector<std::string> violations;
  void on_attention(std::uint64_t t, const AttentionMap&) override {
    attention_first = t == expected_t;
  }
  void on_loss(const LossSample& s) override {
    if (s.t != expected_t) violations.push_back("gap at " + std::to_string(s.t));
    if (source->served > s.t + 2) violations.push_back("late sample " + std::to_string(s.t));
    if (!attention_first) violations.push_back("attention missing for " + std::to_string(s.t));
    if (!(s.pred_loss >= 0.0) || !(s.mw_loss >= 0.0)) violations.push_back("negative loss");
    ++expected_t;
  }
};

TEST(Trainer, EmitsEachSampleBeforeReadingAhead) {
  for (std::size_t k : {1u, 4u}) {
    auto scenario = make_regime_scenario(2, 4, 120, 1, 1.0f, 0.3f, {5, 1}, 9, 1);
    SyntheticSource inner(scenario);
    CountingSource src(inner);
    OrderingSink sink;
    sink.source = &src;
    TrainerConfig cfg = fast_trainer();
    cfg.bptt_window = k;
    const auto out = run_stream(cfg, init_model(small_model(), 1), src, &sink);
    EXPECT_TRUE(sink.violations.empty()) << sink.violations.front();
    EXPECT_EQ(sink.expected_t, 119u);
    EXPECT_EQ(out.stats.frames_read, 120u);
    EXPECT_LE(out.stats.peak_retained_frames, k + 1);
    EXPECT_EQ(out.stats.peak_retained_frames, k + 1);
  }
}

TEST(Trainer, NoDropoutNoLearningMatchesInference) {
  auto scenario = make_regime_scenario(2, 4, 60, 1, 1.0f, 0.3f, {5, 1}, 2, 1);
  const auto frames = generate_frames(scenario);
  const Model initial = init_model(small_model(), 4);
  TrainerConfig cfg = fast_trainer(0.0);
  cfg.dropout = 0.0;
  VectorSource src(frames.header, frames.frames);
  const auto out = run_stream(cfg, initial, src);

  const auto pc = initial.config.predictor();
  PredictorState state = initial.state;
  for (std::size_t t = 0; t + 1 < frames.frames.size(); ++t) {
    const Matrix cur = to_matrix(frames.frames[t], frames.header);
    const Matrix next = to_matrix(frames.frames[t + 1], frames.header);
    const auto att = attention_forward(initial.attention.value, initial.config.pairing, state.hidden, cur);
    auto pred = predictor_forward(initial.predictor.value, pc, state, att.masked, cur,
                                  DropoutMask::all_keep(pc.hidden_dim, pc.locations), false);
    EXPECT_EQ(out.losses[t].pred_loss, prediction_loss(pred.prediction, next).loss) << t;
    EXPECT_EQ(out.losses[t].mw_loss, motion_weighted_loss(pred.prediction, cur, next).loss) << t;
    state = std::move(pred.state);
  }
}

TEST(Trainer, BackpropWindowAndClippingStayFinite) {
  auto scenario = make_regime_scenario(2, 8, 10000, 20, 1.0f, 0.2f, {5, 1}, 12, 1);
  SyntheticSource src(scenario);
  TrainerConfig cfg = fast_trainer();
  cfg.bptt_window = 2;
  cfg.grad_clip = 10.0;
  cfg.training_loss = LossKind::MotionWeighted;
  RunOptions opts;
  opts.keep_losses = false;
  const auto out = run_stream(cfg, init_model(small_model(2, 8), 7), src, nullptr, opts);
  EXPECT_TRUE(out.losses.empty());
  EXPECT_EQ(out.stats.steps, 9999u);
  EXPECT_TRUE(oracle::all_finite(out.final_model));
}

TEST(Trainer, TooShortStreamsAndShapeMismatchAreRejected) {
  auto one = constant_scenario(1);
  SyntheticSource s1(one);
  EXPECT_THROW(run_stream(fast_trainer(), init_model(small_model(), 1), s1), ContractError);
  auto ok = constant_scenario(10);
  SyntheticSource s2(ok);
  EXPECT_THROW(run_stream(fast_trainer(), init_model(small_model(2, 5), 1), s2), ContractError);
  TrainerConfig bad = fast_trainer();
  bad.dropout = 1.0;
  EXPECT_THROW(bad.validate(), ContractError);
  bad = fast_trainer();
  bad.bptt_window = 0;
  EXPECT_THROW(bad.validate(), ContractError);
}

TEST(Trainer, DivergenceKeepsLastFiniteModel) {
  auto scenario = make_regime_scenario(2, 4, 100, 1, 1.0f, 0.3f, {5, 1}, 2, 1);
  SyntheticSource src(scenario);
  try {
    run_stream(fast_trainer(1e300), init_model(small_model(), 1), src);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("step"), std::string::npos);
    EXPECT_TRUE(oracle::all_finite(e.last_finite()));
    EXPECT_LE(e.last_finite().adam_step, e.step());
  }
}

std::vector<RunOutputs> unwrap(std::vector<WorkerResult> r) {
  std::vector<RunOutputs> out;
  for (auto& w : r) {
    EXPECT_TRUE(w.ok()) << w.error;
    if (w.ok()) out.push_back(std::move(*w.outputs));
  }
  return out;
}

TEST(RunParallel, SingleStreamEqualsRunStream) {
  auto scenario = make_regime_scenario(2, 4, 80, 1, 1.0f, 0.3f, {5, 1}, 2, 1);
  const Model initial = init_model(small_model(), 3);
  SyntheticSource a(scenario), b(scenario);
  const auto direct = run_stream(fast_trainer(), initial, a);
  FrameSource* streams[] = {&b};
  const auto par = unwrap(run_parallel(fast_trainer(), initial, streams));
  ASSERT_EQ(par.size(), 1u);
  EXPECT_EQ(par[0].losses, direct.losses);
  EXPECT_TRUE(oracle::models_bit_equal(par[0].final_model, direct.final_model));
}

TEST(RunParallel, IdenticalStreamsGiveIdenticalOutputs) {
  auto scenario = make_regime_scenario(2, 4, 80, 1, 1.0f, 0.3f, {5, 1}, 2, 1);
  std::vector<std::unique_ptr<SyntheticSource>> owned;
  std::vector<FrameSource*> streams;
  for (int i = 0; i < 4; ++i) {
    owned.push_back(std::make_unique<SyntheticSource>(scenario));
    streams.push_back(owned.back().get());
  }
  const auto par = unwrap(run_parallel(fast_trainer(), init_model(small_model(), 3), streams, {}, {}, 4));
  ASSERT_EQ(par.size(), 4u);
  for (int i = 1; i < 4; ++i) {
    EXPECT_EQ(par[i].losses, par[0].losses);
    EXPECT_TRUE(oracle::models_bit_equal(par[i].final_model, par[0].final_model));
  }
}

TEST(RunParallel, MatchesSequentialRunsAndIsolatesFailures) {
  auto first = make_regime_scenario(2, 4, 90, 2, 1.0f, 0.3f, {5, 1}, 21, 1);
  auto second = make_regime_scenario(2, 4, 70, 1, 2.0f, 0.1f, {5, 1}, 22, 1);
  auto broken = constant_scenario(1);
  const Model initial = init_model(small_model(), 3);

  SyntheticSource s1(first), s2(second);
  const auto r1 = run_stream(fast_trainer(), initial, s1);
  const auto r2 = run_stream(fast_trainer(), initial, s2);

  SyntheticSource p1(first), p2(second), p3(broken);
  FrameSource* streams[] = {&p1, &p3, &p2};
  auto par = run_parallel(fast_trainer(), initial, streams, {}, {}, 2);
  ASSERT_EQ(par.size(), 3u);
  ASSERT_TRUE(par[0].ok());
  ASSERT_TRUE(par[2].ok());
  EXPECT_FALSE(par[1].ok());
  EXPECT_NE(par[1].error.find("at least 2 frames"), std::string::npos);
  EXPECT_EQ(par[0].outputs->losses, r1.losses);
  EXPECT_EQ(par[2].outputs->losses, r2.losses);
  EXPECT_TRUE(oracle::models_bit_equal(par[2].outputs->final_model, r2.final_model));
}

TEST(OnlineTrainer, PushInterfaceMatchesRunStream) {
  auto scenario = make_regime_scenario(2, 4, 40, 1, 1.0f, 0.3f, {5, 1}, 2, 1);
  const auto frames = generate_frames(scenario);
  const Model initial = init_model(small_model(), 3);
  VectorSource src(frames.header, frames.frames);
  const auto batch = run_stream(fast_trainer(), initial, src);

  OnlineTrainer trainer(fast_trainer(), initial);
  std::vector<LossSample> live;
  for (const auto& f : frames.frames)
    if (auto s = trainer.push(to_matrix(f, frames.header))) live.push_back(*s);
  EXPECT_EQ(live, batch.losses);
  EXPECT_THROW(trainer.push(Matrix::Zero(3, 4)), ContractError);
}

}  // namespace
}  // namespace evseg
