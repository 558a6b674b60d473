#pragma once

// Checkpoint file ("EVCK"), little-endian:
//   magic | version u32 | value bytes u32 (8) | N M H Din Da u32 | pairing u32 |
//   input mode u32 | shared u32 | adam step u64 | state step u64 | tensor count u32 |
//   per tensor: rows u32, cols u32, rows*cols f64 column-major.
// Tensor order: attention value/m1/m2, predictor value/m1/m2, hidden, cell.

#include "evseg/model.hpp"

#include <filesystem>
#include <iosfwd>

namespace evseg {

void save_checkpoint(const Model& model, std::ostream& sink);
Model load_checkpoint(std::istream& source);

void save_checkpoint_file(const Model& model, const std::filesystem::path& path);
Model load_checkpoint_file(const std::filesystem::path& path);

}  // namespace evseg
