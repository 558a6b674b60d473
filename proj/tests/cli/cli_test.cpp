#include "evseg/annotations.hpp"
#include "evseg/checkpoint.hpp"
#include "evseg/cli.hpp"
#include "evseg/evaluation.hpp"
#include "evseg/synthetic.hpp"
#include "evseg/traces.hpp"
#include "evseg/trainer.hpp"

#include "model_compare.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace evseg {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::evseg_main(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("evseg_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("EVSEG_THREADS");
  }
  void TearDown() override {
    unsetenv("EVSEG_THREADS");
    fs::remove_all(dir_);
  }

  std::string path(const std::string& rel) const { return (dir_ / rel).string(); }

  /// Small synthetic stream used by most cases: 400 frames, 2x2 grid, M=4, 3 boundaries.
  void synth(const std::string& rel = "s") {
    const auto r = cli({"synth", "--out", path(rel), "--frames", "400", "--grid", "2", "--dim", "4",
                        "--boundaries", "3", "--noise", "0.05", "--seed", "4", "--fps", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  static SyntheticScenario small_scenario() {
    return make_regime_scenario(2, 4, 400, 3, 1.0f, 0.05f, {5, 1}, 4, 1);
  }

  fs::path dir_;
};

TEST_F(CliTest, SynthWritesStreamAndAnnotations) {
  synth();
  const auto loaded = read_stream_file(path("s/stream.evsg"));
  const auto expected = generate_frames(small_scenario());
  EXPECT_EQ(loaded.header, expected.header);
  EXPECT_EQ(loaded.frames, expected.frames);
  const auto ann = load_annotations(path("s/annotations.csv"), 400, {5, 1});
  EXPECT_EQ(ann.intervals, transition_events(small_scenario()));
  EXPECT_TRUE(fs::exists(path("s/manifest.json")));

  synth("again");
  EXPECT_EQ(slurp(path("s/stream.evsg")), slurp(path("again/stream.evsg")));
  EXPECT_EQ(slurp(path("s/annotations.csv")), slurp(path("again/annotations.csv")));
}

TEST_F(CliTest, SynthFromScenarioFile) {
  std::ofstream(path("scenario.yaml")) << "grid_side: 1\nfeature_dim: 2\nfps: 10\nseed: 3\nevent_length: 2\n"
                                          "segments:\n  - length: 20\n    mean: 0\n"
                                          "  - length: 30\n    mean_seed: 4\n    noise: 0.1\n";
  const auto r = cli({"synth", "--scenario", path("scenario.yaml"), "--out", path("y")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto loaded = read_stream_file(path("y/stream.evsg"));
  EXPECT_EQ(loaded.header.frame_count, 50u);
  EXPECT_EQ(loaded.header.fps, (Rational{10, 1}));
  const auto ann = load_annotations(path("y/annotations.csv"), 50, {10, 1});
  ASSERT_EQ(ann.intervals.size(), 1u);
  EXPECT_EQ(ann.intervals[0].start_frame, 19u);
  EXPECT_EQ(ann.intervals[0].end_frame, 20u);
}

TEST_F(CliTest, RunMatchesLibraryAndIsDeterministic) {
  synth();
  const std::string before = slurp(path("s/stream.evsg"));
  for (const char* out : {"r1", "r2"}) {
    const auto r = cli({"run", "--input", path("s/stream.evsg"), "--out", path(out), "--lr", "1e-3",
                        "--seed", "9", "--bptt", "2", "--loss", "mw", "--attention-csv"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(slurp(path("r1/losses.csv")), slurp(path("r2/losses.csv")));
  EXPECT_EQ(slurp(path("r1/attention.csv")), slurp(path("r2/attention.csv")));
  EXPECT_EQ(slurp(path("r1/checkpoint.evck")), slurp(path("r2/checkpoint.evck")));
  EXPECT_EQ(slurp(path("s/stream.evsg")), before);

  TrainerConfig tc;
  tc.adam.learning_rate = 1e-3;
  tc.seed = 9;
  tc.bptt_window = 2;
  tc.training_loss = LossKind::MotionWeighted;
  auto reader = StreamReader::open(path("s/stream.evsg"));
  const auto direct =
      run_stream(tc, init_model(ModelConfig::for_stream(reader->header()), 9), *reader);
  EXPECT_EQ(read_loss_csv_file(path("r1/losses.csv")), direct.losses);
  EXPECT_TRUE(oracle::models_bit_equal(load_checkpoint_file(path("r1/checkpoint.evck")), direct.final_model));
}

TEST_F(CliTest, RunWithZeroLearningRateRepeats) {
  synth();
  for (const char* out : {"a", "b"})
    ASSERT_EQ(cli({"run", "--input", path("s/stream.evsg"), "--out", path(out), "--lr", "0"}).code, 0);
  EXPECT_EQ(slurp(path("a/losses.csv")), slurp(path("b/losses.csv")));
  EXPECT_TRUE(fs::exists(path("a/manifest.json")));
  EXPECT_TRUE(fs::exists(path("a/checkpoint.evck")));
}

TEST_F(CliTest, ParallelPortionsMatchSequentialRuns) {
  synth();
  ASSERT_EQ(cli({"run", "--input", path("s/stream.evsg"), "--out", path("p"), "--parallel", "4", "--lr",
                 "1e-3", "--seed", "2"})
                .code,
            0);
  setenv("EVSEG_THREADS", "1", 1);
  ASSERT_EQ(cli({"run", "--input", path("s/stream.evsg"), "--out", path("q"), "--parallel", "4", "--lr",
                 "1e-3", "--seed", "2"})
                .code,
            0);

  TrainerConfig tc;
  tc.adam.learning_rate = 1e-3;
  tc.seed = 2;
  for (int k = 0; k < 4; ++k) {
    const std::string part = "/part_0" + std::to_string(k);
    auto reader = StreamReader::open(path("s/stream.evsg"));
    reader->restrict_to(100u * k, 100);
    const auto direct = run_stream(tc, init_model(ModelConfig::for_stream(reader->header()), 2), *reader);
    auto trace = read_loss_csv_file(path("p") + part + "/losses.csv");
    ASSERT_EQ(trace.size(), 99u);
    EXPECT_EQ(trace.front().t, 100u * k);
    for (auto& s : trace) s.t -= 100u * k;
    EXPECT_EQ(trace, direct.losses) << part;
    EXPECT_EQ(slurp(path("p") + part + "/losses.csv"), slurp(path("q") + part + "/losses.csv"));
  }
}

TEST_F(CliTest, GateMatchesLibrarySweep) {
  synth();
  ASSERT_EQ(cli({"run", "--input", path("s/stream.evsg"), "--out", path("r"), "--lr", "1e-3"}).code, 0);
  for (const char* out : {"g1", "g2"}) {
    const auto r = cli({"gate", "--input", path("r/losses.csv"), "--out", path(out), "--gate", "adaptive",
                        "--n", "8", "--m", "32", "--psi", "0.5", "2", "--phi", "0", "3", "--signal", "mw"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(slurp(path("g1/index.csv")), slurp(path("g2/index.csv")));

  const auto signal = select_signal(read_loss_csv_file(path("r/losses.csv")), LossKind::MotionWeighted);
  const GateGrid grid{GateMode::Adaptive, 8, 32, {2.0, 0.5}, {0, 3}};
  const auto sets = sweep_detections(signal, grid);
  std::ifstream index(path("g1/index.csv"));
  std::string line;
  std::getline(index, line);
  std::size_t k = 0;
  while (std::getline(index, line)) {
    const auto f = split_csv_line(line);
    ASSERT_LT(k, sets.size());
    EXPECT_EQ(parse_real(f[0]), sets[k].threshold);
    EXPECT_EQ(std::stoull(f[1]), sets[k].join_window);
    EXPECT_EQ(load_detections(path("g1/" + f[2])), sets[k].events);
    EXPECT_EQ(slurp(path("g1/" + f[2])), slurp(path("g2/" + f[2])));
    ++k;
  }
  EXPECT_EQ(k, sets.size());
}

TEST_F(CliTest, EvalMatchesLibraryScores) {
  synth();
  ASSERT_EQ(cli({"run", "--input", path("s/stream.evsg"), "--out", path("r"), "--lr", "1e-3"}).code, 0);
  ASSERT_EQ(cli({"gate", "--input", path("r/losses.csv"), "--out", path("g"), "--psi-quantiles", "6",
                 "--phi", "0", "4"})
                .code,
            0);
  for (const char* out : {"e1", "e2"}) {
    const auto r = cli({"eval", "--input", path("g"), "--annotations", path("s/annotations.csv"), "--out",
                        path(out), "--instant-pad", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(slurp(path("e1/summary.csv")), slurp(path("e2/summary.csv")));
  EXPECT_EQ(slurp(path("e1/frame_roc_phi1.csv")), slurp(path("e2/frame_roc_phi1.csv")));

  const auto truth = load_annotations(path("s/annotations.csv"), 400, {5, 1}, {1});
  std::vector<DetectionSet> sets;
  std::ifstream index(path("g/index.csv"));
  std::string line;
  std::getline(index, line);
  while (std::getline(index, line)) {
    const auto f = split_csv_line(line);
    sets.push_back({parse_real(f[0]), std::stoull(f[1]), load_detections(path("g/" + f[2]))});
  }
  const auto tables = evaluate_detections(sets, truth);
  ASSERT_EQ(tables.frame_curves.size(), 2u);
  for (std::size_t j = 0; j < tables.frame_curves.size(); ++j) {
    std::ostringstream expected;
    write_roc_csv(expected, tables.frame_curves[j]);
    EXPECT_EQ(slurp(path("e1/frame_roc_phi" + std::to_string(j) + ".csv")), expected.str());
  }
  for (std::size_t i = 0; i < tables.activity_curves.size(); ++i) {
    std::ostringstream expected;
    write_roc_csv(expected, tables.activity_curves[i]);
    EXPECT_EQ(slurp(path("e1/activity_roc_psi" + std::to_string(i) + ".csv")), expected.str());
  }
}

TEST_F(CliTest, ConfigFileIsOverriddenByFlags) {
  synth();
  std::ofstream(path("run.toml")) << "[run]\nlr = 0.001\nseed = 9\n[gate]\nn = 4\n";
  ASSERT_EQ(cli({"run", "--config", path("run.toml"), "--input", path("s/stream.evsg"), "--out", path("c")}).code, 0);
  ASSERT_EQ(cli({"run", "--input", path("s/stream.evsg"), "--out", path("d"), "--lr", "0.001", "--seed", "9"}).code,
            0);
  ASSERT_EQ(cli({"run", "--config", path("run.toml"), "--input", path("s/stream.evsg"), "--out", path("e"),
                 "--seed", "1"})
                .code,
            0);
  EXPECT_TRUE(slurp(path("c/losses.csv")) == slurp(path("d/losses.csv")));
  EXPECT_FALSE(slurp(path("c/losses.csv")) == slurp(path("e/losses.csv")));
}

TEST_F(CliTest, UsageErrorsExitWithTwo) {
  synth();
  const std::string in = path("s/stream.evsg");
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"run", "--out", path("x")}).code, 2);
  EXPECT_EQ(cli({"run", "--input", in, "--out", path("x"), "--loss", "l1"}).code, 2);
  EXPECT_EQ(cli({"run", "--input", in, "--out", path("x"), "--bogus"}).code, 2);
  EXPECT_EQ(cli({"run", "--input", in, "--input", in, "--out", path("x"), "--parallel", "2"}).code, 2);
  EXPECT_EQ(cli({"run", "--input", in, "--out", path("x"), "--dropout", "1.5"}).code, 2);
  EXPECT_EQ(cli({"gate", "--input", in, "--out", path("x"), "--n", "8", "--m", "8", "--psi", "1"}).code, 2);
  EXPECT_EQ(cli({"synth", "--out", path("x"), "--fps", "0/1"}).code, 2);
  setenv("EVSEG_THREADS", "many", 1);
  EXPECT_EQ(cli({"run", "--input", in, "--out", path("x")}).code, 2);
  EXPECT_EQ(cli({"--help"}).code, 0);
  EXPECT_EQ(cli({"--version"}).code, 0);
}

TEST_F(CliTest, RuntimeFailuresExitWithOne) {
  synth();
  const std::string bytes = slurp(path("s/stream.evsg"));
  std::ofstream(path("cut.evsg"), std::ios::binary) << bytes.substr(0, bytes.size() - 10);
  const auto truncated = cli({"run", "--input", path("cut.evsg"), "--out", path("t")});
  EXPECT_EQ(truncated.code, 1);
  EXPECT_NE(truncated.err.find("truncated frame"), std::string::npos);

  const auto diverged = cli({"run", "--input", path("s/stream.evsg"), "--out", path("d"), "--lr", "1e300"});
  EXPECT_EQ(diverged.code, 1);
  EXPECT_NE(diverged.err.find("checkpoint.diverged.evck"), std::string::npos);
  EXPECT_TRUE(oracle::all_finite(load_checkpoint_file(path("d/checkpoint.diverged.evck"))));
}

}  // namespace
}  // namespace evseg
