#include "evseg/cli.hpp"

#include "commands.hpp"

#include "evseg/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <ostream>

namespace evseg::cli {
namespace {

std::optional<std::size_t> thread_cap_from_env() {
  const char* raw = std::getenv("EVSEG_THREADS");
  if (!raw || !*raw) return std::nullopt;
  std::size_t value = 0;
  const char* end = raw + std::char_traits<char>::length(raw);
  const auto [ptr, ec] = std::from_chars(raw, end, value);
  if (ec != std::errc{} || ptr != end || value == 0)
    throw UsageError("EVSEG_THREADS must be a positive integer, got '" + std::string(raw) + "'");
  return value;
}

}  // namespace

Rational parse_fps_flag(const std::string& text) {
  try {
    return parse_rational(text);
  } catch (const std::exception& e) {
    throw UsageError("--fps: " + std::string(e.what()));
  }
}

int evseg_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Streaming self-supervised event segmentation", "evseg"};
  app.require_subcommand(1);
  app.set_version_flag("--version", EVSEG_VERSION);
  app.set_config("--config", "", "TOML/INI file with option defaults in [run], [gate], [eval] or [synth] sections");
  app.fallthrough();

  RunArgs run;
  GateArgs gate;
  EvalArgs eval;
  SynthArgs synth;
  auto* run_cmd = app.add_subcommand("run", "Train online over feature streams and trace the losses");
  auto* gate_cmd = app.add_subcommand("gate", "Threshold loss traces into detections over a (psi, phi) grid");
  auto* eval_cmd = app.add_subcommand("eval", "Score detections against annotations (frame and activity ROC)");
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic feature stream with ground truth");
  add_run_options(*run_cmd, run);
  add_gate_options(*gate_cmd, gate);
  add_eval_options(*eval_cmd, eval);
  add_synth_options(*synth_cmd, synth);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << EVSEG_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "evseg: " << e.what() << '\n';
    if (!app.get_subcommands().empty()) err << "run 'evseg " << app.get_subcommands().front()->get_name()
                                            << " --help' for usage\n";
    return kExitUsage;
  }

  try {
    Context ctx;
    ctx.argv.push_back("evseg");
    ctx.argv.insert(ctx.argv.end(), args.begin(), args.end());
    ctx.out = &out;
    ctx.err = &err;
    ctx.thread_cap = thread_cap_from_env();
    if (run_cmd->parsed()) return cmd_run(run, ctx);
    if (gate_cmd->parsed()) return cmd_gate(gate, ctx);
    if (eval_cmd->parsed()) return cmd_eval(eval, ctx);
    return cmd_synth(synth, ctx);
  } catch (const UsageError& e) {
    err << "evseg: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "evseg: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace evseg::cli
