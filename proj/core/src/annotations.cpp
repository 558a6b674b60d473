#include "evseg/annotations.hpp"

#include "evseg/errors.hpp"
#include "evseg/traces.hpp"

#include <charconv>
#include <fstream>

namespace evseg {
namespace {

std::uint64_t parse_frame(const std::string& text, std::size_t row) {
  std::string_view s = text;
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw FormatError("row " + std::to_string(row) + ": invalid frame index '" + text + "'");
  return v;
}

bool blank(const std::string& s) { return s.find_first_not_of(" \r\t") == std::string::npos; }

}  // namespace

void AnnotationSet::validate() const {
  if (fps.num == 0 || fps.den == 0) throw ContractError("annotations: fps must be > 0");
  for (const auto& e : intervals) {
    if (e.start_frame > e.end_frame) throw ContractError("annotations: start after end");
    if (e.end_frame >= total_frames)
      throw ContractError("annotations: interval [" + std::to_string(e.start_frame) + ", " +
                          std::to_string(e.end_frame) + "] exceeds " + std::to_string(total_frames) +
                          " frames");
  }
}

AnnotationSet read_annotations(std::istream& in, std::uint64_t total_frames, Rational fps,
                               AnnotationOptions options) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("annotations: empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "start_frame" || header[1] != "end_frame")
    throw FormatError("annotations: expected header start_frame,end_frame,label");

  AnnotationSet set{{}, total_frames, fps};
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (blank(line)) continue;
    const auto f = split_csv_line(line);
    if (f.size() < 2) throw FormatError("annotations: row " + std::to_string(row) + " is short");
    EventInterval e;
    const auto start = parse_frame(f[0], row);
    if (blank(f[1])) {
      e.start_frame = start > options.instant_pad ? start - options.instant_pad : 0;
      e.end_frame = start + options.instant_pad;
      if (total_frames > 0) e.end_frame = std::min(e.end_frame, total_frames - 1);
    } else {
      e.start_frame = start;
      e.end_frame = parse_frame(f[1], row);
    }
    if (f.size() > 2) e.label = f[2];
    if (e.start_frame > e.end_frame)
      throw FormatError("annotations: row " + std::to_string(row) + " ends before it starts");
    set.intervals.push_back(std::move(e));
  }
  set.validate();
  return set;
}

AnnotationSet load_annotations(const std::filesystem::path& path, std::uint64_t total_frames,
                               Rational fps, AnnotationOptions options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_annotations(in, total_frames, fps, options);
}

void write_annotations(std::ostream& out, std::span<const EventInterval> intervals) {
  out << "start_frame,end_frame,label\n";
  for (const auto& e : intervals) out << e.start_frame << ',' << e.end_frame << ',' << e.label << '\n';
}

void save_annotations(const std::filesystem::path& path, std::span<const EventInterval> intervals) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_annotations(out, intervals);
  if (!out) throw IoError("failed writing " + path.string());
}

void write_detections(std::ostream& out, std::span<const EventInterval> intervals) {
  out << "start_frame,end_frame,score\n";
  for (const auto& e : intervals) {
    out << e.start_frame << ',' << e.end_frame << ',';
    if (e.score) out << format_real(*e.score);
    out << '\n';
  }
}

void save_detections(const std::filesystem::path& path, std::span<const EventInterval> intervals) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_detections(out, intervals);
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<EventInterval> read_detections(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("detections: empty file");
  const auto header = split_csv_line(line);
  if (header.size() != 3 || header[0] != "start_frame" || header[1] != "end_frame" ||
      header[2] != "score")
    throw FormatError("detections: expected header start_frame,end_frame,score");
  std::vector<EventInterval> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (blank(line)) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw FormatError("detections: row " + std::to_string(row) + " needs 3 fields");
    EventInterval e;
    e.start_frame = parse_frame(f[0], row);
    e.end_frame = parse_frame(f[1], row);
    if (!blank(f[2])) e.score = parse_real(f[2]);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<EventInterval> load_detections(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_detections(in);
}

}  // namespace evseg
