#include "evseg/checkpoint.hpp"
#include "evseg/errors.hpp"
#include "evseg/synthetic.hpp"
#include "evseg/trainer.hpp"

#include "model_compare.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace evseg {
namespace {

Model trained_model(ModelConfig cfg) {
  auto scenario = make_regime_scenario(cfg.grid_side, cfg.feature_dim, 30, 1, 1.0f, 0.1f, {5, 1}, 3, 1);
  SyntheticSource src(scenario);
  TrainerConfig tc;
  tc.adam.learning_rate = 1e-3;
  return run_stream(tc, init_model(cfg, 9), src).final_model;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  for (bool shared : {true, false}) {
    for (auto mode : {InputMode::ProjectedHidden, InputMode::StrictTeacher}) {
      ModelConfig cfg;
      cfg.grid_side = 2;
      cfg.feature_dim = 5;
      cfg.shared_weights = shared;
      cfg.input_mode = mode;
      cfg.pairing = shared ? HiddenPairing::PerLocation : HiddenPairing::MeanPooled;
      const Model m = trained_model(cfg);
      ASSERT_GT(m.adam_step, 0u);
      std::stringstream buf;
      save_checkpoint(m, buf);
      const Model back = load_checkpoint(buf);
      EXPECT_TRUE(oracle::models_bit_equal(m, back));
    }
  }
}

TEST(Checkpoint, RestoredModelContinuesIdentically) {
  ModelConfig cfg;
  cfg.grid_side = 2;
  cfg.feature_dim = 4;
  const Model m = trained_model(cfg);
  std::stringstream buf;
  save_checkpoint(m, buf);
  Model restored = load_checkpoint(buf);

  auto scenario = make_regime_scenario(2, 4, 20, 0, 1.0f, 0.1f, {5, 1}, 77, 1);
  TrainerConfig tc;
  tc.adam.learning_rate = 1e-3;
  SyntheticSource a(scenario), b(scenario);
  const auto ra = run_stream(tc, m, a);
  const auto rb = run_stream(tc, std::move(restored), b);
  EXPECT_EQ(ra.losses, rb.losses);
  EXPECT_TRUE(oracle::models_bit_equal(ra.final_model, rb.final_model));
}

TEST(Checkpoint, RejectsForeignAndTruncatedData) {
  std::stringstream bad("NOPE and more bytes than a header needs.........");
  EXPECT_THROW(load_checkpoint(bad), FormatError);

  ModelConfig cfg;
  cfg.grid_side = 1;
  cfg.feature_dim = 3;
  std::stringstream buf;
  save_checkpoint(init_model(cfg, 1), buf);
  const std::string bytes = buf.str();
  std::stringstream cut(bytes.substr(0, bytes.size() - 5));
  EXPECT_THROW(load_checkpoint(cut), FormatError);
}

}  // namespace
}  // namespace evseg
