#include "evseg/feature_stream.hpp"

#include "evseg/errors.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

namespace evseg {
namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

template <class T>
void put_le(unsigned char* out, T value) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits;
  std::memcpy(&bits, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) out[i] = static_cast<unsigned char>(bits >> (8 * i));
}

template <class T>
T get_le(const unsigned char* in) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(in[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

void encode_frame(const FeatureFrame& frame, std::vector<unsigned char>& out) {
  out.resize(frame.values.size() * 4);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), frame.values.data(), out.size());
  } else {
    for (std::size_t i = 0; i < frame.values.size(); ++i) put_le(out.data() + 4 * i, frame.values[i]);
  }
}

}  // namespace

Rational parse_rational(std::string_view text) {
  auto parse_part = [&](std::string_view part) {
    std::uint32_t v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc{} || ptr != part.data() + part.size() || v == 0)
      throw FormatError("invalid rational '" + std::string(text) + "'");
    return v;
  };
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return Rational{parse_part(text), 1};
  return Rational{parse_part(text.substr(0, slash)), parse_part(text.substr(slash + 1))};
}

std::string to_string(const Rational& r) {
  return r.den == 1 ? std::to_string(r.num) : std::to_string(r.num) + "/" + std::to_string(r.den);
}

void StreamHeader::validate() const {
  if (grid_side < 1) throw FormatError("stream header: grid side N must be >= 1");
  if (feature_dim < 1) throw FormatError("stream header: feature dim M must be >= 1");
  if (fps.num == 0 || fps.den == 0) throw FormatError("stream header: fps must be > 0");
}

Matrix to_matrix(const FeatureFrame& frame, const StreamHeader& header) {
  if (frame.values.size() != header.frame_values())
    throw ContractError("frame " + std::to_string(frame.index) + " has " +
                        std::to_string(frame.values.size()) + " values, header expects " +
                        std::to_string(header.frame_values()));
  const auto m = static_cast<Eigen::Index>(header.feature_dim);
  const auto g = static_cast<Eigen::Index>(header.locations());
  return Eigen::Map<const Eigen::MatrixXf>(frame.values.data(), m, g).cast<double>();
}

FeatureFrame from_matrix(const Matrix& m, std::uint64_t index) {
  FeatureFrame f{index, std::vector<float>(static_cast<std::size_t>(m.size()))};
  Eigen::Map<Eigen::MatrixXf>(f.values.data(), m.rows(), m.cols()) = m.cast<float>();
  return f;
}

StreamWriter::StreamWriter(std::ostream& sink, const StreamHeader& header)
    : sink_(sink), header_(header) {
  header_.validate();
  std::array<unsigned char, kStreamHeaderBytes> bytes{};
  std::memcpy(bytes.data(), kStreamMagic.data(), 4);
  put_le(bytes.data() + 4, header_.version);
  put_le(bytes.data() + 8, header_.grid_side);
  put_le(bytes.data() + 12, header_.feature_dim);
  put_le(bytes.data() + 16, header_.frame_count);
  put_le(bytes.data() + 24, header_.fps.num);
  put_le(bytes.data() + 28, header_.fps.den);
  sink_.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  if (!sink_) throw IoError("failed to write stream header");
}

void StreamWriter::write(const FeatureFrame& frame) {
  if (frame.values.size() != header_.frame_values())
    throw FormatError("frame " + std::to_string(written_) + ": " +
                      std::to_string(frame.values.size()) + " values, expected " +
                      std::to_string(header_.frame_values()));
  if (header_.frame_count != 0 && written_ >= header_.frame_count)
    throw FormatError("more frames than the header's frame count " +
                      std::to_string(header_.frame_count));
  for (std::size_t i = 0; i < frame.values.size(); ++i) {
    if (!std::isfinite(frame.values[i]))
      throw FormatError("frame " + std::to_string(written_) + ": non-finite value at offset " +
                        std::to_string(i));
  }
  encode_frame(frame, buffer_);
  sink_.write(reinterpret_cast<const char*>(buffer_.data()),
              static_cast<std::streamsize>(buffer_.size()));
  if (!sink_) throw IoError("failed to write frame " + std::to_string(written_));
  ++written_;
}

void write_stream(const StreamHeader& header, std::span<const FeatureFrame> frames,
                  std::ostream& sink) {
  if (header.frame_count != 0 && header.frame_count != frames.size())
    throw FormatError("header frame count " + std::to_string(header.frame_count) +
                      " does not match " + std::to_string(frames.size()) + " frames");
  StreamWriter writer(sink, header);
  for (const auto& f : frames) writer.write(f);
  sink.flush();
  if (!sink) throw IoError("failed to flush stream");
}

void write_stream_file(const std::filesystem::path& path, const StreamHeader& header,
                       std::span<const FeatureFrame> frames) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_stream(header, frames, out);
}

StreamReader::StreamReader(std::istream& source) : source_(&source) {
  std::array<unsigned char, kStreamHeaderBytes> bytes{};
  source_->read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (source_->gcount() < 4 || std::memcmp(bytes.data(), kStreamMagic.data(), 4) != 0)
    throw FormatError("bad magic: not an EVSG feature stream");
  if (static_cast<std::size_t>(source_->gcount()) != bytes.size())
    throw FormatError("truncated stream header");
  header_.version = get_le<std::uint32_t>(bytes.data() + 4);
  header_.grid_side = get_le<std::uint32_t>(bytes.data() + 8);
  header_.feature_dim = get_le<std::uint32_t>(bytes.data() + 12);
  header_.frame_count = get_le<std::uint64_t>(bytes.data() + 16);
  header_.fps.num = get_le<std::uint32_t>(bytes.data() + 24);
  header_.fps.den = get_le<std::uint32_t>(bytes.data() + 28);
  if (header_.version != kStreamVersion)
    throw FormatError("unsupported stream version " + std::to_string(header_.version));
  header_.validate();
  if (header_.frame_count != 0) stop_index_ = header_.frame_count;
}

StreamReader::StreamReader(std::unique_ptr<std::ifstream> owned)
    : StreamReader(*owned) {
  owned_ = std::move(owned);
}

std::unique_ptr<StreamReader> StreamReader::open(const std::filesystem::path& path) {
  auto file = std::make_unique<std::ifstream>(path, std::ios::binary);
  if (!*file) throw IoError("cannot open " + path.string());
  return std::unique_ptr<StreamReader>(new StreamReader(std::move(file)));
}

void StreamReader::restrict_to(std::uint64_t first, std::uint64_t count) {
  if (header_.frame_count != 0 && first + count > header_.frame_count)
    throw ContractError("frame range [" + std::to_string(first) + ", " +
                        std::to_string(first + count) + ") exceeds stream length " +
                        std::to_string(header_.frame_count));
  const auto offset = kStreamHeaderBytes + first * header_.frame_bytes();
  source_->clear();
  source_->seekg(static_cast<std::streamoff>(offset));
  if (!*source_) throw IoError("cannot seek to frame " + std::to_string(first));
  next_index_ = first;
  stop_index_ = first + count;
}

std::optional<FeatureFrame> StreamReader::next() {
  if (stop_index_ && next_index_ >= *stop_index_) return std::nullopt;
  buffer_.resize(header_.frame_bytes());
  source_->read(reinterpret_cast<char*>(buffer_.data()),
                static_cast<std::streamsize>(buffer_.size()));
  const auto got = static_cast<std::size_t>(source_->gcount());
  if (got == 0 && !stop_index_) return std::nullopt;  // open-ended stream, clean EOF
  if (got != buffer_.size())
    throw FormatError("truncated frame " + std::to_string(next_index_) + ": got " +
                      std::to_string(got) + " of " + std::to_string(buffer_.size()) + " bytes");

  FeatureFrame frame{next_index_, std::vector<float>(header_.frame_values())};
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(frame.values.data(), buffer_.data(), buffer_.size());
  } else {
    for (std::size_t i = 0; i < frame.values.size(); ++i)
      frame.values[i] = get_le<float>(buffer_.data() + 4 * i);
  }
  for (std::size_t i = 0; i < frame.values.size(); ++i) {
    if (!std::isfinite(frame.values[i]))
      throw FormatError("frame " + std::to_string(next_index_) + ": non-finite value at location " +
                        std::to_string(i / header_.feature_dim) + ", feature " +
                        std::to_string(i % header_.feature_dim));
  }
  ++next_index_;
  return frame;
}

LoadedStream read_stream(std::istream& source) {
  StreamReader reader(source);
  LoadedStream out{reader.header(), {}};
  while (auto f = reader.next()) out.frames.push_back(std::move(*f));
  return out;
}

LoadedStream read_stream_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_stream(in);
}

}  // namespace evseg
