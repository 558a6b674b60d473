#include "commands.hpp"
#include "manifest.hpp"

#include "evseg/annotations.hpp"
#include "evseg/feature_stream.hpp"
#include "evseg/errors.hpp"
#include "evseg/synthetic.hpp"

#include <fstream>
#include <ostream>

namespace evseg::cli {

void add_synth_options(CLI::App& app, SynthArgs& a) {
  app.add_option("--scenario", a.scenario, "YAML scenario; overrides the generator flags below")
      ->check(CLI::ExistingFile);
  app.add_option("--out", a.out, "Output directory")->required();
  app.add_option("--frames", a.frames, "Total frames")->capture_default_str();
  app.add_option("--grid", a.grid, "Grid side N (G = N*N locations)")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--dim", a.dim, "Feature dimension M")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--boundaries", a.boundaries, "Evenly spaced regime changes")->capture_default_str();
  app.add_option("--mean-scale", a.mean_scale, "Std-dev of per-regime feature means")->capture_default_str();
  app.add_option("--noise", a.noise, "Per-frame Gaussian noise")->capture_default_str();
  app.add_option("--fps", a.fps, "Frame rate, num or num/den")->capture_default_str();
  app.add_option("--seed", a.seed, "Generator seed")->capture_default_str();
  app.add_option("--event-length", a.event_length, "Frames per ground-truth transition event")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

int cmd_synth(const SynthArgs& a, const Context& ctx) {
  SyntheticScenario scenario;
  if (a.scenario) {
    scenario = load_scenario(*a.scenario);
  } else {
    if (a.boundaries + 1 > a.frames) throw UsageError("--boundaries needs at least one frame per segment");
    scenario = make_regime_scenario(a.grid, a.dim, a.frames, a.boundaries, static_cast<float>(a.mean_scale),
                                    static_cast<float>(a.noise), parse_fps_flag(a.fps), a.seed,
                                    a.event_length);
  }
  auto generated = generate_synthetic(scenario);

  std::filesystem::create_directories(a.out);
  const auto stream_path = a.out / "stream.evsg";
  {
    std::ofstream out(stream_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + stream_path.string() + " for writing");
    StreamWriter writer(out, generated.stream->header());
    while (auto frame = generated.stream->next()) writer.write(*frame);
    out.flush();
    if (!out) throw IoError("failed writing " + stream_path.string());
  }
  const auto annotations_path = a.out / "annotations.csv";
  save_annotations(annotations_path, generated.events);

  Json manifest = manifest_header(ctx, "synth");
  Json cfg;
  if (a.scenario) {
    cfg["scenario"] = a.scenario->string();
  } else {
    cfg = {{"frames", a.frames},         {"grid", a.grid},   {"dim", a.dim},
           {"boundaries", a.boundaries}, {"mean_scale", a.mean_scale},
           {"noise", a.noise},           {"fps", a.fps},     {"seed", a.seed},
           {"event_length", a.event_length}};
  }
  manifest["config"] = cfg;
  manifest["stream"] = {{"grid_side", scenario.grid_side},
                        {"feature_dim", scenario.feature_dim},
                        {"frame_count", scenario.total_frames()},
                        {"fps", to_string(scenario.fps)}};
  manifest["outputs"] = {{"stream", stream_path.string()}, {"annotations", annotations_path.string()}};
  manifest["events"] = generated.events.size();
  write_json(a.out / "manifest.json", manifest);
  *ctx.out << scenario.total_frames() << " frames, " << generated.events.size() << " events written to "
           << a.out.string() << '\n';
  return kExitOk;
}

}  // namespace evseg::cli
