#include "commands.hpp"
#include "manifest.hpp"

#include "evseg/annotations.hpp"
#include "evseg/errors.hpp"
#include "evseg/evaluation.hpp"
#include "evseg/gating.hpp"
#include "evseg/traces.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

namespace evseg::cli {
namespace {

namespace fs = std::filesystem;

/// fps recorded by `evseg run` next to a loss trace, if any.
std::optional<Rational> fps_from_run_manifest(const fs::path& losses) {
  for (const auto& dir : {losses.parent_path(), losses.parent_path().parent_path()}) {
    const auto path = dir / "manifest.json";
    if (!fs::exists(path)) continue;
    const Json m = read_json(path);
    if (m.contains("stream") && m["stream"].contains("fps"))
      return parse_rational(m["stream"]["fps"].get<std::string>());
  }
  return std::nullopt;
}

std::vector<double> quantile_thresholds(std::vector<double> values, std::size_t count) {
  std::vector<double> out;
  if (values.empty()) return out;
  std::sort(values.begin(), values.end());
  for (std::size_t k = 1; k <= count; ++k) {
    const double q = static_cast<double>(k) / static_cast<double>(count + 1);
    out.push_back(values[static_cast<std::size_t>(q * static_cast<double>(values.size() - 1))]);
  }
  return out;
}

}  // namespace

void add_gate_options(CLI::App& app, GateArgs& a) {
  app.add_option("--input", a.inputs, "Loss trace(s) in frame order (losses.csv)")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--out", a.out, "Output directory")->required();
  app.add_option("--gate", a.gate, "Gate mode")
      ->capture_default_str()
      ->check(CLI::IsMember({"simple", "adaptive"}));
  app.add_option("--signal", a.signal, "Loss signal to threshold")
      ->capture_default_str()
      ->check(CLI::IsMember({"pred", "mw"}));
  app.add_option("--n", a.n, "Smoothing window (adaptive)")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--m", a.m, "History buffer, must exceed --n (adaptive)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--psi", a.psi, "Threshold value(s)");
  app.add_option("--psi-quantiles", a.psi_quantiles, "Add K thresholds at evenly spaced quantiles of the gated signal")
      ->capture_default_str();
  app.add_option("--phi", a.phi, "Joining window(s) in frames")->capture_default_str();
  app.add_option("--fps", a.fps, "Frame rate (default: from the run manifest)");
  app.add_option("--frames", a.frames, "Total frames in the stream (default: last sample + 2)");
}

int cmd_gate(const GateArgs& a, const Context& ctx) {
  const GateMode mode = parse_gate_mode(a.gate);
  const LossKind signal_kind = parse_loss_kind(a.signal);
  try {
    GateConfig{mode, 0.0, a.m, a.n, signal_kind}.validate();
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }
  if (a.psi.empty() && a.psi_quantiles == 0) throw UsageError("give --psi values or --psi-quantiles");
  if (a.phi.empty()) throw UsageError("--phi needs at least one value");

  std::vector<std::vector<double>> signals;
  std::vector<std::uint64_t> offsets;
  std::uint64_t last_t = 0;
  for (const auto& path : a.inputs) {
    const auto trace = read_loss_csv_file(path);
    if (trace.empty()) throw FormatError(path.string() + ": no loss samples");
    if (!offsets.empty() && trace.front().t <= last_t)
      throw UsageError("--input traces must be given in frame order without overlap");
    offsets.push_back(trace.front().t);
    last_t = trace.back().t;
    signals.push_back(select_signal(trace, signal_kind));
  }

  Rational fps;
  if (a.fps) {
    fps = parse_fps_flag(*a.fps);
  } else if (auto found = fps_from_run_manifest(a.inputs.front())) {
    fps = *found;
  } else {
    throw UsageError("--fps is required when no run manifest sits next to the loss trace");
  }
  const std::uint64_t total_frames = a.frames.value_or(last_t + 2);
  if (total_frames < last_t + 2) throw UsageError("--frames is smaller than the loss trace");

  GateGrid grid{mode, a.n, a.m, a.psi, a.phi};
  if (a.psi_quantiles > 0) {
    GateConfig cfg{mode, 0.0, a.m, a.n, signal_kind};
    std::vector<double> all;
    for (const auto& s : signals) {
      const auto g = gated_signal(s, cfg);
      all.insert(all.end(), g.begin(), g.end());
    }
    const auto q = quantile_thresholds(std::move(all), a.psi_quantiles);
    grid.thresholds.insert(grid.thresholds.end(), q.begin(), q.end());
  }
  std::sort(grid.thresholds.begin(), grid.thresholds.end(), std::greater<>());
  grid.thresholds.erase(std::unique(grid.thresholds.begin(), grid.thresholds.end()), grid.thresholds.end());
  std::sort(grid.join_windows.begin(), grid.join_windows.end());
  grid.join_windows.erase(std::unique(grid.join_windows.begin(), grid.join_windows.end()),
                          grid.join_windows.end());

  // Each trace is gated on its own (independent models, independent gate state).
  std::vector<DetectionSet> merged;
  for (std::size_t i = 0; i < signals.size(); ++i) {
    auto sets = sweep_detections(signals[i], grid);
    if (merged.empty()) merged.resize(sets.size());
    for (std::size_t k = 0; k < sets.size(); ++k) {
      merged[k].threshold = sets[k].threshold;
      merged[k].join_window = sets[k].join_window;
      for (auto e : sets[k].events) {
        e.start_frame += offsets[i];
        e.end_frame += offsets[i];
        merged[k].events.push_back(e);
      }
    }
  }

  fs::create_directories(a.out / "detections");
  std::ofstream index(a.out / "index.csv", std::ios::trunc);
  if (!index) throw IoError("cannot open " + (a.out / "index.csv").string() + " for writing");
  index << "psi,phi,file\n";
  std::size_t point = 0;
  for (std::size_t i = 0; i < grid.thresholds.size(); ++i) {
    for (std::size_t j = 0; j < grid.join_windows.size(); ++j, ++point) {
      const std::string name = "detections/psi" + std::to_string(i) + "_phi" + std::to_string(j) + ".csv";
      save_detections(a.out / name, merged[point].events);
      index << format_real(grid.thresholds[i]) << ',' << grid.join_windows[j] << ',' << name << '\n';
    }
  }
  index.close();
  if (!index) throw IoError("failed writing index.csv");

  Json meta;
  meta["total_frames"] = total_frames;
  meta["fps"] = to_string(fps);
  meta["gate"] = {{"mode", a.gate}, {"signal", a.signal}, {"n", a.n}, {"m", a.m}};
  meta["thresholds"] = grid.thresholds;
  meta["join_windows"] = grid.join_windows;
  write_json(a.out / "meta.json", meta);

  Json manifest = manifest_header(ctx, "gate");
  std::vector<std::string> inputs;
  for (const auto& p : a.inputs) inputs.push_back(p.string());
  manifest["config"] = {{"inputs", inputs},          {"gate", a.gate},
                        {"signal", a.signal},        {"n", a.n},
                        {"m", a.m},                  {"psi", a.psi},
                        {"psi_quantiles", a.psi_quantiles}, {"phi", a.phi},
                        {"fps", to_string(fps)},     {"frames", total_frames}};
  manifest["outputs"] = {{"index", (a.out / "index.csv").string()},
                         {"meta", (a.out / "meta.json").string()},
                         {"grid_points", point}};
  write_json(a.out / "manifest.json", manifest);
  *ctx.out << point << " grid points written to " << a.out.string() << '\n';
  return kExitOk;
}

}  // namespace evseg::cli
