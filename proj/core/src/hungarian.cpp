#include "evseg/hungarian.hpp"

#include "evseg/errors.hpp"

#include <algorithm>
#include <limits>

namespace evseg {
namespace {

// Shortest augmenting path with row/column potentials, O(n^2 m), n <= m.
// Indices are 1-based inside; column 0 is the virtual start.
std::vector<std::ptrdiff_t> solve_wide(const std::vector<std::vector<std::int64_t>>& a,
                                       std::size_t n, std::size_t m) {
  constexpr auto kInf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::int64_t> u(n + 1, 0), v(m + 1, 0);
  std::vector<std::size_t> row_of(m + 1, 0), way(m + 1, 0);
  std::vector<std::int64_t> min_slack(m + 1);
  std::vector<char> used(m + 1);

  for (std::size_t i = 1; i <= n; ++i) {
    row_of[0] = i;
    std::size_t col = 0;
    std::fill(min_slack.begin(), min_slack.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col] = 1;
      const std::size_t row = row_of[col];
      std::int64_t delta = kInf;
      std::size_t next_col = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const std::int64_t slack = a[row - 1][j - 1] - u[row] - v[j];
        if (slack < min_slack[j]) {
          min_slack[j] = slack;
          way[j] = col;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          next_col = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[row_of[j]] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      col = next_col;
    } while (row_of[col] != 0);
    do {
      const std::size_t prev = way[col];
      row_of[col] = row_of[prev];
      col = prev;
    } while (col != 0);
  }

  std::vector<std::ptrdiff_t> assignment(n, -1);
  for (std::size_t j = 1; j <= m; ++j)
    if (row_of[j] != 0) assignment[row_of[j] - 1] = static_cast<std::ptrdiff_t>(j - 1);
  return assignment;
}

}  // namespace

std::vector<std::ptrdiff_t> solve_assignment(const std::vector<std::vector<std::int64_t>>& cost) {
  const std::size_t rows = cost.size();
  if (rows == 0) return {};
  const std::size_t cols = cost.front().size();
  for (const auto& r : cost)
    if (r.size() != cols) throw ContractError("solve_assignment: ragged cost matrix");
  if (cols == 0) return std::vector<std::ptrdiff_t>(rows, -1);

  if (rows <= cols) return solve_wide(cost, rows, cols);

  std::vector<std::vector<std::int64_t>> transposed(cols, std::vector<std::int64_t>(rows));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) transposed[j][i] = cost[i][j];
  const auto by_col = solve_wide(transposed, cols, rows);
  std::vector<std::ptrdiff_t> assignment(rows, -1);
  for (std::size_t j = 0; j < cols; ++j)
    if (by_col[j] >= 0) assignment[static_cast<std::size_t>(by_col[j])] = static_cast<std::ptrdiff_t>(j);
  return assignment;
}

}  // namespace evseg
