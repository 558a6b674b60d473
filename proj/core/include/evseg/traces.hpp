#pragma once

// CSV/PGM exporters for loss and attention traces.
//
//   losses.csv     t,pred_loss,mw_loss
//   attention.csv  t,w0,...,w{G-1}
//   attention/frame_<t>.pgm  binary PGM, weights min-max rescaled to [0,255]

#include "evseg/losses.hpp"
#include "evseg/trainer.hpp"

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <vector>

namespace evseg {

/// Shortest decimal text that parses back to the same double.
std::string format_real(double v);
double parse_real(std::string_view text);

class LossCsvSink final : public TraceSink {
 public:
  explicit LossCsvSink(const std::filesystem::path& path);
  void on_loss(const LossSample& sample) override;

 private:
  std::ofstream out_;
};

class AttentionCsvSink final : public TraceSink {
 public:
  AttentionCsvSink(const std::filesystem::path& path, std::size_t locations);
  void on_attention(std::uint64_t t, const AttentionMap& map) override;

 private:
  std::ofstream out_;
};

class AttentionImageSink final : public TraceSink {
 public:
  /// Each grid cell becomes a `scale` x `scale` block of pixels.
  AttentionImageSink(std::filesystem::path directory, std::uint32_t grid_side, std::uint32_t scale = 1);
  void on_attention(std::uint64_t t, const AttentionMap& map) override;

 private:
  std::filesystem::path directory_;
  std::uint32_t grid_side_;
  std::uint32_t scale_;
};

/// Forwards every callback to each child (non-owning).
class FanOutSink final : public TraceSink {
 public:
  explicit FanOutSink(std::vector<TraceSink*> children) : children_(std::move(children)) {}
  void on_attention(std::uint64_t t, const AttentionMap& map) override;
  void on_loss(const LossSample& sample) override;

 private:
  std::vector<TraceSink*> children_;
};

/// Grayscale bytes of one attention map, row-major over the N x N grid.
std::vector<unsigned char> attention_to_gray(const AttentionMap& map);
void write_pgm(const std::filesystem::path& path, std::uint32_t width, std::uint32_t height,
               const std::vector<unsigned char>& pixels);

std::vector<LossSample> read_loss_csv(std::istream& in);
std::vector<LossSample> read_loss_csv_file(const std::filesystem::path& path);

/// Splits one CSV line on commas (no quoting).
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace evseg
