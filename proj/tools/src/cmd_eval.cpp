#include "commands.hpp"
#include "manifest.hpp"

#include "evseg/annotations.hpp"
#include "evseg/errors.hpp"
#include "evseg/evaluation.hpp"
#include "evseg/traces.hpp"

#include <fstream>
#include <ostream>

namespace evseg::cli {
namespace {

namespace fs = std::filesystem;

struct IndexRow {
  double psi;
  std::uint64_t phi;
  fs::path file;
};

std::vector<IndexRow> read_index(const fs::path& dir) {
  std::ifstream in(dir / "index.csv");
  if (!in) throw IoError("cannot open " + (dir / "index.csv").string());
  std::string line;
  if (!std::getline(in, line) || line != "psi,phi,file") throw FormatError("index.csv: expected header psi,phi,file");
  std::vector<IndexRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw FormatError("index.csv: malformed row '" + line + "'");
    rows.push_back({parse_real(f[0]), static_cast<std::uint64_t>(std::stoull(f[1])), dir / f[2]});
  }
  if (rows.empty()) throw FormatError("index.csv: no grid points");
  return rows;
}

void write_text(const fs::path& path, const auto& writer) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  writer(out);
  if (!out) throw IoError("failed writing " + path.string());
}

Json point_json(const GridPoint& p) {
  return {{"psi", p.threshold},
          {"phi", p.join_window},
          {"frame", {{"tp", p.frame.tp}, {"fp", p.frame.fp}, {"tn", p.frame.tn}, {"fn", p.frame.fn},
                     {"recall", p.frame.recall}, {"fpr", p.frame.fpr}}},
          {"activity", {{"matched", p.activity.matched}, {"gt_total", p.activity.gt_total},
                        {"det_total", p.activity.det_total}, {"recall", p.activity.recall},
                        {"fp_per_min", p.activity.fp_per_min}}}};
}

}  // namespace

void add_eval_options(CLI::App& app, EvalArgs& a) {
  app.add_option("--input", a.input, "Directory written by `evseg gate`")->required()->check(CLI::ExistingDirectory);
  app.add_option("--annotations", a.annotations, "Ground truth CSV start_frame,end_frame[,label]")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--out", a.out, "Output directory")->required();
  app.add_option("--instant-pad", a.instant_pad, "Frames added on each side of instant annotations")
      ->capture_default_str();
  app.add_option("--min-overlap", a.min_overlap, "Minimum overlap as a fraction of the annotated interval")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--fps", a.fps, "Frame rate (default: from the gate output)");
}

int cmd_eval(const EvalArgs& a, const Context& ctx) {
  const Json meta = read_json(a.input / "meta.json");
  const auto total_frames = meta.at("total_frames").get<std::uint64_t>();
  const Rational fps = a.fps ? parse_fps_flag(*a.fps) : parse_rational(meta.at("fps").get<std::string>());
  const auto truth = load_annotations(a.annotations, total_frames, fps, {a.instant_pad});

  std::vector<DetectionSet> sets;
  for (const auto& row : read_index(a.input)) sets.push_back({row.psi, row.phi, load_detections(row.file)});
  const MatchOptions options{a.min_overlap};
  const auto tables = evaluate_detections(sets, truth, options);

  fs::create_directories(a.out);
  std::vector<std::string> files;
  for (std::size_t j = 0; j < tables.frame_curves.size(); ++j) {
    const auto name = "frame_roc_phi" + std::to_string(j) + ".csv";
    write_text(a.out / name, [&](std::ostream& o) { write_roc_csv(o, tables.frame_curves[j]); });
    files.push_back(name);
  }
  for (std::size_t i = 0; i < tables.activity_curves.size(); ++i) {
    const auto name = "activity_roc_psi" + std::to_string(i) + ".csv";
    write_text(a.out / name, [&](std::ostream& o) { write_roc_csv(o, tables.activity_curves[i]); });
    files.push_back(name);
  }
  write_text(a.out / "summary.csv", [&](std::ostream& o) {
    o << "psi,phi,tp,fp,tn,fn,frame_recall,frame_fpr,matched,gt_total,det_total,activity_recall,fp_per_min\n";
    for (const auto& p : tables.points)
      o << format_real(p.threshold) << ',' << p.join_window << ',' << p.frame.tp << ',' << p.frame.fp << ','
        << p.frame.tn << ',' << p.frame.fn << ',' << format_real(p.frame.recall) << ','
        << format_real(p.frame.fpr) << ',' << p.activity.matched << ',' << p.activity.gt_total << ','
        << p.activity.det_total << ',' << format_real(p.activity.recall) << ','
        << format_real(p.activity.fp_per_min) << '\n';
  });

  const GridPoint& best = best_activity_point(tables.points);
  std::size_t best_index = static_cast<std::size_t>(&best - tables.points.data());
  const auto matching = hungarian_match(truth.intervals, sets[best_index].events, options);
  write_text(a.out / "labels.csv", [&](std::ostream& o) {
    o << "label,matched,total\n";
    for (const auto& [label, counts] : per_label_recall(truth.intervals, matching))
      o << label << ',' << counts.first << ',' << counts.second << '\n';
  });

  Json frame_curves = Json::array(), activity_curves = Json::array();
  for (const auto& c : tables.frame_curves) frame_curves.push_back(c.fixed);
  for (const auto& c : tables.activity_curves) activity_curves.push_back(c.fixed);
  Json summary;
  summary["best_activity_point"] = point_json(best);
  summary["frame_curves_phi"] = frame_curves;
  summary["activity_curves_psi"] = activity_curves;
  summary["duration_minutes"] = truth.duration_minutes();
  summary["annotations"] = truth.intervals.size();
  write_json(a.out / "best.json", summary);

  Json manifest = manifest_header(ctx, "eval");
  manifest["config"] = {{"input", a.input.string()},
                        {"annotations", a.annotations.string()},
                        {"instant_pad", a.instant_pad},
                        {"min_overlap", a.min_overlap},
                        {"fps", to_string(fps)},
                        {"total_frames", total_frames}};
  manifest["outputs"] = files;
  write_json(a.out / "manifest.json", manifest);

  *ctx.out << "best activity point: psi=" << format_real(best.threshold) << " phi=" << best.join_window
           << " recall=" << best.activity.recall << " fp/min=" << best.activity.fp_per_min << '\n';
  return kExitOk;
}

}  // namespace evseg::cli
