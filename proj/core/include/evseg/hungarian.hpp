#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace evseg {

/// Minimum-cost assignment (Kuhn-Munkres with potentials) on a rectangular
/// cost matrix given as rows of equal length. Every row is assigned when
/// rows <= cols, every column otherwise. Returns the column assigned to each
/// row, or -1 for unassigned rows.
std::vector<std::ptrdiff_t> solve_assignment(const std::vector<std::vector<std::int64_t>>& cost);

}  // namespace evseg
