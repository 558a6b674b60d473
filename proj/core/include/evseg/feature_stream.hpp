#pragma once

// Binary feature-stream container ("EVSG").
//
// Layout, all little-endian:
//   magic "EVSG" | version u32 | N u32 | M u32 | T u64 | fps_num u32 | fps_den u32
//   then T frames (or frames until EOF when T == 0), each N*N*M f32 values,
//   grid-location-major: value (g, k) sits at offset g*M + k.

#include "evseg/tensor.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace evseg {

inline constexpr std::array<char, 4> kStreamMagic{'E', 'V', 'S', 'G'};
inline constexpr std::uint32_t kStreamVersion = 1;
inline constexpr std::size_t kStreamHeaderBytes = 32;

struct Rational {
  std::uint32_t num = 1;
  std::uint32_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
};

/// Accepts "num" or "num/den" with positive integers.
Rational parse_rational(std::string_view text);
std::string to_string(const Rational& r);

struct StreamHeader {
  std::uint32_t version = kStreamVersion;
  std::uint32_t grid_side = 1;     // N
  std::uint32_t feature_dim = 1;   // M
  std::uint64_t frame_count = 0;   // T, 0 = open-ended
  Rational fps;

  std::size_t locations() const { return std::size_t{grid_side} * grid_side; }
  std::size_t frame_values() const { return locations() * feature_dim; }
  std::size_t frame_bytes() const { return frame_values() * sizeof(float); }

  /// Throws FormatError when N, M or fps are out of range.
  void validate() const;
  bool operator==(const StreamHeader&) const = default;
};

struct FeatureFrame {
  std::uint64_t index = 0;
  std::vector<float> values;  // G*M, location-major

  bool operator==(const FeatureFrame&) const = default;
};

/// M x G double matrix view of a frame (column g = location g).
Matrix to_matrix(const FeatureFrame& frame, const StreamHeader& header);
FeatureFrame from_matrix(const Matrix& m, std::uint64_t index);

/// Sequential producer of frames; next() returns nullopt at end of stream.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual const StreamHeader& header() const = 0;
  virtual std::optional<FeatureFrame> next() = 0;
};

class StreamWriter {
 public:
  /// Writes the header immediately.
  StreamWriter(std::ostream& sink, const StreamHeader& header);

  void write(const FeatureFrame& frame);
  std::uint64_t frames_written() const { return written_; }

 private:
  std::ostream& sink_;
  StreamHeader header_;
  std::uint64_t written_ = 0;
  std::vector<unsigned char> buffer_;
};

void write_stream(const StreamHeader& header, std::span<const FeatureFrame> frames,
                  std::ostream& sink);
void write_stream_file(const std::filesystem::path& path, const StreamHeader& header,
                       std::span<const FeatureFrame> frames);

/// Reads and validates the header, then yields frames lazily.
class StreamReader final : public FrameSource {
 public:
  explicit StreamReader(std::istream& source);

  /// Opens a file; the reader owns the stream.
  static std::unique_ptr<StreamReader> open(const std::filesystem::path& path);

  const StreamHeader& header() const override { return header_; }
  std::optional<FeatureFrame> next() override;

  /// Positions the reader at frame `first` and stops after `count` frames.
  /// Requires a seekable source.
  void restrict_to(std::uint64_t first, std::uint64_t count);

 private:
  StreamReader(std::unique_ptr<std::ifstream> owned);

  std::unique_ptr<std::ifstream> owned_;
  std::istream* source_;
  StreamHeader header_;
  std::uint64_t next_index_ = 0;
  std::optional<std::uint64_t> stop_index_;
  std::vector<unsigned char> buffer_;
};

struct LoadedStream {
  StreamHeader header;
  std::vector<FeatureFrame> frames;
};

LoadedStream read_stream(std::istream& source);
LoadedStream read_stream_file(const std::filesystem::path& path);

/// In-memory source, mostly for tests and small fixtures.
class VectorSource final : public FrameSource {
 public:
  VectorSource(StreamHeader header, std::vector<FeatureFrame> frames)
      : header_(header), frames_(std::move(frames)) {}

  const StreamHeader& header() const override { return header_; }
  std::optional<FeatureFrame> next() override {
    if (pos_ >= frames_.size()) return std::nullopt;
    return frames_[pos_++];
  }

 private:
  StreamHeader header_;
  std::vector<FeatureFrame> frames_;
  std::size_t pos_ = 0;
};

}  // namespace evseg
