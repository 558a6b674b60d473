#pragma once

#include "evseg/cli.hpp"
#include "evseg/feature_stream.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace evseg::cli {

/// Bad flag combination or value detected after parsing; exits with kExitUsage.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Context {
  std::vector<std::string> argv;
  std::ostream* out;
  std::ostream* err;
  std::optional<std::size_t> thread_cap;  // EVSEG_THREADS
};

struct RunArgs {
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path out;
  double lr = 1e-8;
  std::string loss = "pred";
  std::string reduction = "sum";
  double dropout = 0.4;
  std::uint64_t seed = 0;
  std::size_t parallel = 1;
  std::size_t bptt = 1;
  std::optional<double> grad_clip;
  std::uint32_t hidden = 0;
  std::uint32_t input_dim = 0;
  std::uint32_t attention_dim = 0;
  bool pooled_attention = false;
  bool strict_teacher = false;
  bool unshared = false;
  bool attention_csv = false;
  std::optional<std::uint32_t> attention_images;  // pixel scale per grid cell
  std::optional<std::filesystem::path> resume;
  bool plot = false;
};

struct GateArgs {
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path out;
  std::string gate = "adaptive";
  std::string signal = "pred";
  std::size_t n = 16;
  std::size_t m = 64;
  std::vector<double> psi;
  std::size_t psi_quantiles = 0;
  std::vector<std::uint64_t> phi = {0};
  std::optional<std::string> fps;
  std::optional<std::uint64_t> frames;
};

struct EvalArgs {
  std::filesystem::path input;
  std::filesystem::path annotations;
  std::filesystem::path out;
  std::uint64_t instant_pad = 0;
  double min_overlap = 0.0;
  std::optional<std::string> fps;
};

struct SynthArgs {
  std::optional<std::filesystem::path> scenario;
  std::filesystem::path out;
  std::uint64_t frames = 5000;
  std::uint32_t grid = 4;
  std::uint32_t dim = 16;
  std::size_t boundaries = 10;
  double mean_scale = 1.0;
  double noise = 0.1;
  std::string fps = "5";
  std::uint64_t seed = 0;
  std::uint64_t event_length = 1;
};

void add_run_options(CLI::App& app, RunArgs& args);
void add_gate_options(CLI::App& app, GateArgs& args);
void add_eval_options(CLI::App& app, EvalArgs& args);
void add_synth_options(CLI::App& app, SynthArgs& args);

int cmd_run(const RunArgs& args, const Context& ctx);
int cmd_gate(const GateArgs& args, const Context& ctx);
int cmd_eval(const EvalArgs& args, const Context& ctx);
int cmd_synth(const SynthArgs& args, const Context& ctx);

Rational parse_fps_flag(const std::string& text);

}  // namespace evseg::cli
