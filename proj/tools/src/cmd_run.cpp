#include "commands.hpp"
#include "manifest.hpp"
#include "plot.hpp"

#include "evseg/checkpoint.hpp"
#include "evseg/errors.hpp"
#include "evseg/model.hpp"
#include "evseg/traces.hpp"
#include "evseg/trainer.hpp"

#include <chrono>
#include <cstdio>
#include <memory>
#include <ostream>

namespace evseg::cli {
namespace {

namespace fs = std::filesystem;

/// Shifts frame indices so traces of a stream portion use stream-global indices.
class OffsetSink final : public TraceSink {
 public:
  OffsetSink(TraceSink& inner, std::uint64_t offset) : inner_(inner), offset_(offset) {}
  void on_attention(std::uint64_t t, const AttentionMap& map) override {
    inner_.on_attention(t + offset_, map);
  }
  void on_loss(const LossSample& sample) override {
    LossSample shifted = sample;
    shifted.t += offset_;
    inner_.on_loss(shifted);
  }

 private:
  TraceSink& inner_;
  std::uint64_t offset_;
};

struct Portion {
  fs::path input;
  std::uint64_t first = 0;
  std::optional<std::uint64_t> count;
  fs::path dir;
};

TrainerConfig trainer_config(const RunArgs& a) {
  TrainerConfig tc;
  tc.adam.learning_rate = a.lr;
  tc.dropout = a.dropout;
  tc.training_loss = parse_loss_kind(a.loss);
  tc.reduction = parse_reduction(a.reduction);
  tc.bptt_window = a.bptt;
  tc.seed = a.seed;
  tc.grad_clip = a.grad_clip;
  try {
    tc.validate();
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }
  return tc;
}

std::vector<Portion> plan_portions(const RunArgs& a) {
  std::vector<Portion> out;
  if (a.parallel > 1) {
    if (a.inputs.size() != 1)
      throw UsageError("--parallel splits a single --input; pass one input or drop --parallel");
    const auto probe = StreamReader::open(a.inputs[0]);
    const std::uint64_t total = probe->header().frame_count;
    if (total == 0) throw UsageError("--parallel needs a stream header with a known frame count");
    const std::uint64_t size = total / a.parallel;
    if (size < 2) throw UsageError("--parallel " + std::to_string(a.parallel) + " leaves fewer than 2 frames per portion");
    for (std::size_t k = 0; k < a.parallel; ++k) {
      const std::uint64_t first = k * size;
      const std::uint64_t count = k + 1 == a.parallel ? total - first : size;
      char name[16];
      std::snprintf(name, sizeof name, "part_%02zu", k);
      out.push_back({a.inputs[0], first, count, a.out / name});
    }
    return out;
  }
  for (std::size_t i = 0; i < a.inputs.size(); ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "part_%02zu", i);
    out.push_back({a.inputs[i], 0, std::nullopt, a.inputs.size() == 1 ? a.out : a.out / name});
  }
  return out;
}

Model initial_model(const RunArgs& a, const StreamHeader& header) {
  if (a.resume) {
    Model m = load_checkpoint_file(*a.resume);
    if (m.config.grid_side != header.grid_side || m.config.feature_dim != header.feature_dim)
      throw UsageError("--resume checkpoint shape does not match the input stream");
    return m;
  }
  ModelConfig cfg = ModelConfig::for_stream(header);
  cfg.hidden_dim = a.hidden;
  cfg.input_dim = a.input_dim;
  cfg.attention_dim = a.attention_dim;
  cfg.pairing = a.pooled_attention ? HiddenPairing::MeanPooled : HiddenPairing::PerLocation;
  cfg.input_mode = a.strict_teacher ? InputMode::StrictTeacher : InputMode::ProjectedHidden;
  cfg.shared_weights = !a.unshared;
  return init_model(cfg, a.seed);
}

Json config_json(const RunArgs& a) {
  Json c;
  c["lr"] = a.lr;
  c["loss"] = a.loss;
  c["reduction"] = a.reduction;
  c["dropout"] = a.dropout;
  c["seed"] = a.seed;
  c["parallel"] = a.parallel;
  c["bptt"] = a.bptt;
  c["grad_clip"] = a.grad_clip ? Json(*a.grad_clip) : Json(nullptr);
  c["hidden"] = a.hidden;
  c["input_dim"] = a.input_dim;
  c["attn_dim"] = a.attention_dim;
  c["pooled_attention"] = a.pooled_attention;
  c["strict_teacher_forcing"] = a.strict_teacher;
  c["unshared"] = a.unshared;
  c["attention_csv"] = a.attention_csv;
  c["attention_images"] = a.attention_images ? Json(*a.attention_images) : Json(nullptr);
  c["resume"] = a.resume ? Json(a.resume->string()) : Json(nullptr);
  std::vector<std::string> inputs;
  for (const auto& p : a.inputs) inputs.push_back(p.string());
  c["inputs"] = inputs;
  return c;
}

Json model_json(const ModelConfig& m) {
  Json j;
  j["grid_side"] = m.grid_side;
  j["feature_dim"] = m.feature_dim;
  j["hidden_dim"] = m.hidden_dim;
  j["input_dim"] = m.input_dim;
  j["attention_dim"] = m.attention_dim;
  j["pairing"] = m.pairing == HiddenPairing::MeanPooled ? "mean_pooled" : "per_location";
  j["input_mode"] = m.input_mode == InputMode::StrictTeacher ? "strict_teacher" : "projected_hidden";
  j["shared_weights"] = m.shared_weights;
  return j;
}

}  // namespace

void add_run_options(CLI::App& app, RunArgs& a) {
  app.add_option("--input", a.inputs, "Feature stream(s); several inputs train independent models")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--out", a.out, "Output directory")->required();
  app.add_option("--lr", a.lr, "Adam learning rate")->capture_default_str()->check(CLI::NonNegativeNumber);
  app.add_option("--loss", a.loss, "Backpropagated loss")
      ->capture_default_str()
      ->check(CLI::IsMember({"pred", "mw"}));
  app.add_option("--reduction", a.reduction, "Loss reduction over entries")
      ->capture_default_str()
      ->check(CLI::IsMember({"sum", "mean"}));
  app.add_option("--dropout", a.dropout, "Recurrent dropout rate in [0, 1)")->capture_default_str();
  app.add_option("--seed", a.seed, "Seed for weight init and dropout masks")->capture_default_str();
  app.add_option("--parallel", a.parallel, "Split one input into K equal portions trained concurrently")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--bptt", a.bptt, "Truncated backprop window in frames")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--grad-clip", a.grad_clip, "Global gradient-norm cap")->check(CLI::PositiveNumber);
  app.add_option("--hidden", a.hidden, "LSTM hidden width (0: feature dim)")->capture_default_str();
  app.add_option("--input-dim", a.input_dim, "Projected LSTM input width (0: feature dim)")
      ->capture_default_str();
  app.add_option("--attn-dim", a.attention_dim, "Attention width (0: max(1, M/8))")->capture_default_str();
  app.add_flag("--pooled-attention", a.pooled_attention, "Score locations against the mean hidden state");
  app.add_flag("--strict-teacher-forcing", a.strict_teacher,
               "Feed concat(masked, raw) features instead of the projected hidden state");
  app.add_flag("--unshared", a.unshared, "One weight set per grid location");
  app.add_flag("--attention-csv", a.attention_csv, "Write attention.csv with one row per frame");
  app.add_option("--attention-images", a.attention_images,
                 "Write attention/frame_*.pgm, SCALE pixels per grid cell")
      ->check(CLI::PositiveNumber);
  app.add_option("--resume", a.resume, "Start from a checkpoint instead of fresh weights")
      ->check(CLI::ExistingFile);
  app.add_flag("--plot", a.plot, "Render losses.png next to each loss trace");
}

int cmd_run(const RunArgs& a, const Context& ctx) {
  const auto started = std::chrono::steady_clock::now();
  const TrainerConfig tc = trainer_config(a);
  if (a.plot && !plot_available()) throw UsageError("--plot: this build has no PNG support");
  const auto portions = plan_portions(a);

  std::vector<std::unique_ptr<StreamReader>> readers;
  for (const auto& p : portions) {
    readers.push_back(StreamReader::open(p.input));
    if (p.count) readers.back()->restrict_to(p.first, *p.count);
  }
  const StreamHeader header = readers.front()->header();
  for (const auto& r : readers)
    if (r->header().grid_side != header.grid_side || r->header().feature_dim != header.feature_dim)
      throw UsageError("all inputs must share grid side and feature dimension");
  const Model initial = initial_model(a, header);

  std::vector<std::unique_ptr<TraceSink>> owned;
  std::vector<FrameSource*> streams;
  std::vector<TraceSink*> sinks;
  for (std::size_t i = 0; i < portions.size(); ++i) {
    const auto& dir = portions[i].dir;
    fs::create_directories(dir);
    std::vector<TraceSink*> children;
    owned.push_back(std::make_unique<LossCsvSink>(dir / "losses.csv"));
    children.push_back(owned.back().get());
    if (a.attention_csv) {
      owned.push_back(std::make_unique<AttentionCsvSink>(dir / "attention.csv", header.locations()));
      children.push_back(owned.back().get());
    }
    if (a.attention_images) {
      fs::create_directories(dir / "attention");
      owned.push_back(
          std::make_unique<AttentionImageSink>(dir / "attention", header.grid_side, *a.attention_images));
      children.push_back(owned.back().get());
    }
    owned.push_back(std::make_unique<FanOutSink>(children));
    TraceSink& fan = *owned.back();
    owned.push_back(std::make_unique<OffsetSink>(fan, portions[i].first));
    sinks.push_back(owned.back().get());
    streams.push_back(readers[i].get());
  }

  std::size_t workers = portions.size();
  if (ctx.thread_cap) workers = std::min(workers, *ctx.thread_cap);
  RunOptions options;
  options.keep_losses = a.plot;
  auto results = run_parallel(tc, initial, streams, sinks, options, workers);
  owned.clear();  // flush and close trace files

  Json manifest = manifest_header(ctx, "run");
  manifest["config"] = config_json(a);
  manifest["model"] = model_json(initial.config);
  manifest["stream"] = {{"grid_side", header.grid_side},
                        {"feature_dim", header.feature_dim},
                        {"frame_count", header.frame_count},
                        {"fps", to_string(header.fps)}};
  manifest["workers"] = workers;
  Json parts = Json::array();
  bool failed = false;
  for (std::size_t i = 0; i < portions.size(); ++i) {
    const auto& p = portions[i];
    auto& r = results[i];
    Json part;
    part["input"] = p.input.string();
    part["first_frame"] = p.first;
    part["dir"] = p.dir.string();
    part["losses"] = (p.dir / "losses.csv").string();
    if (r.ok()) {
      const auto ckpt = p.dir / "checkpoint.evck";
      save_checkpoint_file(r.outputs->final_model, ckpt);
      const auto& st = r.outputs->stats;
      part["status"] = "ok";
      part["checkpoint"] = ckpt.string();
      part["frames"] = st.frames_read;
      part["steps"] = st.steps;
      part["peak_retained_frames"] = st.peak_retained_frames;
      part["seconds"] = st.seconds;
      if (a.plot) {
        const auto png = p.dir / "losses.png";
        write_loss_plot(png, r.outputs->losses);
        part["plot"] = png.string();
      }
      *ctx.out << p.dir.string() << ": " << st.steps << " steps, " << st.seconds << " s\n";
    } else {
      failed = true;
      part["status"] = "failed";
      part["error"] = r.error;
      *ctx.err << "evseg: " << p.dir.string() << ": " << r.error << '\n';
      if (r.diverged) {
        const auto ckpt = p.dir / "checkpoint.diverged.evck";
        save_checkpoint_file(*r.diverged, ckpt);
        part["checkpoint"] = ckpt.string();
        *ctx.err << "evseg: last finite checkpoint written to " << ckpt.string() << '\n';
      }
    }
    parts.push_back(part);
  }
  manifest["parts"] = parts;
  manifest["wall_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  fs::create_directories(a.out);
  write_json(a.out / "manifest.json", manifest);
  return failed ? kExitFailure : kExitOk;
}

}  // namespace evseg::cli
