#include "evseg/checkpoint.hpp"

#include "byte_io.hpp"
#include "evseg/errors.hpp"

#include <array>
#include <fstream>

namespace evseg {
namespace {

constexpr std::array<char, 4> kMagic{'E', 'V', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kValueBytes = 8;

using detail::read_le;
using detail::write_le;

template <class Model_>
std::vector<decltype(&std::declval<Model_&>().state.hidden)> checkpoint_tensors(Model_& m) {
  std::vector<decltype(&m.state.hidden)> out;
  auto append = [&](auto& weights) {
    for (auto* t : weights.tensors()) out.push_back(t);
  };
  append(m.attention.value);
  append(m.attention.first_moment);
  append(m.attention.second_moment);
  append(m.predictor.value);
  append(m.predictor.first_moment);
  append(m.predictor.second_moment);
  out.push_back(&m.state.hidden);
  out.push_back(&m.state.cell);
  return out;
}

}  // namespace

void save_checkpoint(const Model& model, std::ostream& sink) {
  const auto& c = model.config;
  sink.write(kMagic.data(), kMagic.size());
  write_le(sink, kVersion);
  write_le(sink, kValueBytes);
  for (std::uint32_t v : {c.grid_side, c.feature_dim, c.hidden_dim, c.input_dim, c.attention_dim,
                          static_cast<std::uint32_t>(c.pairing),
                          static_cast<std::uint32_t>(c.input_mode),
                          static_cast<std::uint32_t>(c.shared_weights ? 1 : 0)})
    write_le(sink, v);
  write_le(sink, model.adam_step);
  write_le(sink, model.state.step);
  const auto tensors = checkpoint_tensors(model);
  write_le(sink, static_cast<std::uint32_t>(tensors.size()));
  for (const Matrix* t : tensors) {
    write_le(sink, static_cast<std::uint32_t>(t->rows()));
    write_le(sink, static_cast<std::uint32_t>(t->cols()));
    for (Eigen::Index i = 0; i < t->size(); ++i) write_le(sink, t->data()[i]);
  }
  sink.flush();
  if (!sink) throw IoError("failed to write checkpoint");
}

Model load_checkpoint(std::istream& source) {
  std::array<char, 4> magic{};
  source.read(magic.data(), magic.size());
  if (source.gcount() != 4 || magic != kMagic) throw FormatError("bad magic: not an EVCK checkpoint");
  if (read_le<std::uint32_t>(source, "version") != kVersion)
    throw FormatError("unsupported checkpoint version");
  if (read_le<std::uint32_t>(source, "value width") != kValueBytes)
    throw FormatError("unsupported checkpoint value width");

  ModelConfig c;
  c.grid_side = read_le<std::uint32_t>(source, "grid side");
  c.feature_dim = read_le<std::uint32_t>(source, "feature dim");
  c.hidden_dim = read_le<std::uint32_t>(source, "hidden dim");
  c.input_dim = read_le<std::uint32_t>(source, "input dim");
  c.attention_dim = read_le<std::uint32_t>(source, "attention dim");
  const auto pairing = read_le<std::uint32_t>(source, "pairing");
  const auto mode = read_le<std::uint32_t>(source, "input mode");
  const auto shared = read_le<std::uint32_t>(source, "sharing");
  if (pairing > 1 || mode > 1 || shared > 1) throw FormatError("checkpoint: invalid enum field");
  c.pairing = static_cast<HiddenPairing>(pairing);
  c.input_mode = static_cast<InputMode>(mode);
  c.shared_weights = shared == 1;
  if (c.hidden_dim == 0 || c.input_dim == 0 || c.attention_dim == 0)
    throw FormatError("checkpoint: zero model width");

  // Shapes come from a freshly built model of the same architecture.
  Model model = init_model(c, 0);
  model.adam_step = read_le<std::uint64_t>(source, "adam step");
  model.state.step = read_le<std::uint64_t>(source, "state step");
  auto tensors = checkpoint_tensors(model);
  const auto count = read_le<std::uint32_t>(source, "tensor count");
  if (count != tensors.size())
    throw FormatError("checkpoint: expected " + std::to_string(tensors.size()) + " tensors, found " +
                      std::to_string(count));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    Matrix* t = tensors[i];
    const auto rows = read_le<std::uint32_t>(source, "tensor rows");
    const auto cols = read_le<std::uint32_t>(source, "tensor cols");
    if (rows != t->rows() || cols != t->cols())
      throw FormatError("checkpoint: tensor " + std::to_string(i) + " has shape " +
                        std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
                        std::to_string(t->rows()) + "x" + std::to_string(t->cols()));
    for (Eigen::Index k = 0; k < t->size(); ++k) t->data()[k] = read_le<double>(source, "tensor data");
  }
  return model;
}

void save_checkpoint_file(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  save_checkpoint(model, out);
}

Model load_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return load_checkpoint(in);
}

}  // namespace evseg
