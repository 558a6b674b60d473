#include "evseg/traces.hpp"

#include "evseg/errors.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>

namespace evseg {

std::string format_real(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw FormatError("cannot format number");
  return std::string(buf.data(), ptr);
}

double parse_real(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r' || text.back() == '\t'))
    text.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw FormatError("not a number: '" + std::string(text) + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r' && c != '\n') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

LossCsvSink::LossCsvSink(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  out_ << "t,pred_loss,mw_loss\n";
}

void LossCsvSink::on_loss(const LossSample& s) {
  out_ << s.t << ',' << format_real(s.pred_loss) << ',' << format_real(s.mw_loss) << '\n';
  if (!out_) throw IoError("failed writing loss trace");
}

AttentionCsvSink::AttentionCsvSink(const std::filesystem::path& path, std::size_t locations)
    : out_(path, std::ios::trunc) {
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  out_ << 't';
  for (std::size_t g = 0; g < locations; ++g) out_ << ",w" << g;
  out_ << '\n';
}

void AttentionCsvSink::on_attention(std::uint64_t t, const AttentionMap& map) {
  out_ << t;
  for (Eigen::Index g = 0; g < map.weights.size(); ++g) out_ << ',' << format_real(map.weights(g));
  out_ << '\n';
  if (!out_) throw IoError("failed writing attention trace");
}

std::vector<unsigned char> attention_to_gray(const AttentionMap& map) {
  std::vector<unsigned char> px(static_cast<std::size_t>(map.weights.size()));
  if (px.empty()) return px;
  const double lo = map.weights.minCoeff();
  const double hi = map.weights.maxCoeff();
  for (std::size_t i = 0; i < px.size(); ++i) {
    const double unit = hi > lo ? (map.weights(static_cast<Eigen::Index>(i)) - lo) / (hi - lo) : 0.0;
    px[i] = static_cast<unsigned char>(std::lround(255.0 * unit));
  }
  return px;
}

void write_pgm(const std::filesystem::path& path, std::uint32_t width, std::uint32_t height,
               const std::vector<unsigned char>& pixels) {
  if (pixels.size() != std::size_t{width} * height) throw ContractError("pgm: pixel count mismatch");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

AttentionImageSink::AttentionImageSink(std::filesystem::path directory, std::uint32_t grid_side,
                                       std::uint32_t scale)
    : directory_(std::move(directory)), grid_side_(grid_side), scale_(std::max<std::uint32_t>(1, scale)) {
  std::filesystem::create_directories(directory_);
}

void AttentionImageSink::on_attention(std::uint64_t t, const AttentionMap& map) {
  const auto gray = attention_to_gray(map);
  if (gray.size() != std::size_t{grid_side_} * grid_side_)
    throw ContractError("attention image: map size does not match grid");
  const std::uint32_t side = grid_side_ * scale_;
  std::vector<unsigned char> px(std::size_t{side} * side);
  for (std::uint32_t y = 0; y < side; ++y)
    for (std::uint32_t x = 0; x < side; ++x)
      px[std::size_t{y} * side + x] = gray[std::size_t{y / scale_} * grid_side_ + x / scale_];
  char name[40];
  std::snprintf(name, sizeof name, "frame_%08llu.pgm", static_cast<unsigned long long>(t));
  write_pgm(directory_ / name, side, side, px);
}

void FanOutSink::on_attention(std::uint64_t t, const AttentionMap& map) {
  for (auto* c : children_) c->on_attention(t, map);
}

void FanOutSink::on_loss(const LossSample& sample) {
  for (auto* c : children_) c->on_loss(sample);
}

std::vector<LossSample> read_loss_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("loss csv: empty file");
  const auto header = split_csv_line(line);
  if (header.size() != 3 || header[0] != "t" || header[1] != "pred_loss" || header[2] != "mw_loss")
    throw FormatError("loss csv: expected header t,pred_loss,mw_loss");
  std::vector<LossSample> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw FormatError("loss csv: row " + std::to_string(row) + " needs 3 fields");
    LossSample s;
    const auto [end, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), s.t);
    if (ec != std::errc{} || end != f[0].data() + f[0].size())
      throw FormatError("loss csv: bad frame index at row " + std::to_string(row));
    s.pred_loss = parse_real(f[1]);
    s.mw_loss = parse_real(f[2]);
    if (!(s.pred_loss >= 0.0) || !(s.mw_loss >= 0.0) || !std::isfinite(s.pred_loss) ||
        !std::isfinite(s.mw_loss))
      throw FormatError("loss csv: losses must be finite and >= 0 at row " + std::to_string(row));
    if (!out.empty() && s.t != out.back().t + 1)
      throw FormatError("loss csv: frame index gap at row " + std::to_string(row));
    out.push_back(s);
  }
  return out;
}

std::vector<LossSample> read_loss_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_loss_csv(in);
}

}  // namespace evseg
