#pragma once

#include "evseg/losses.hpp"

#include <filesystem>
#include <span>

namespace evseg::cli {

bool plot_available();

/// Two stacked panels (prediction loss above, motion-weighted loss below),
/// each drawn as a per-column min/max envelope so long traces stay legible.
void write_loss_plot(const std::filesystem::path& path, std::span<const LossSample> samples);

}  // namespace evseg::cli
