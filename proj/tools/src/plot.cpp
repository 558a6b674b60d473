#include "plot.hpp"

#include "evseg/errors.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <limits>
#include <optional>
#include <vector>

#ifdef EVSEG_HAVE_PNG
#include <png.h>
#endif

namespace evseg::cli {
namespace {

constexpr int kWidth = 960;
constexpr int kPanelHeight = 280;
constexpr int kMargin = 24;

using Rgb = std::array<unsigned char, 3>;

struct Canvas {
  int width, height;
  std::vector<unsigned char> px;

  Canvas(int w, int h) : width(w), height(h), px(static_cast<std::size_t>(w) * h * 3, 255) {}

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    auto* p = &px[(static_cast<std::size_t>(y) * width + x) * 3];
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }
  void vline(int x, int y0, int y1, Rgb c) {
    for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y) set(x, y, c);
  }
  void hline(int x0, int x1, int y, Rgb c) {
    for (int x = x0; x <= x1; ++x) set(x, y, c);
  }
};

void draw_panel(Canvas& canvas, int top, std::span<const double> values, Rgb colour) {
  const int left = kMargin, right = kWidth - kMargin;
  const int upper = top + kMargin, lower = top + kPanelHeight - kMargin;
  constexpr Rgb frame{90, 90, 90};
  canvas.hline(left, right, upper, frame);
  canvas.hline(left, right, lower, frame);
  canvas.vline(left, upper, lower, frame);
  canvas.vline(right, upper, lower, frame);
  if (values.empty()) return;

  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double span = *hi_it > lo ? *hi_it - lo : 1.0;
  const int inner = right - left - 1;
  auto to_y = [&](double v) { return lower - 1 - static_cast<int>((v - lo) / span * (lower - upper - 2)); };

  const std::size_t n = values.size();
  std::optional<double> previous;
  for (int col = 0; col < inner; ++col) {
    const std::size_t a = n * static_cast<std::size_t>(col) / static_cast<std::size_t>(inner);
    if (a >= n) break;
    const std::size_t b = std::min(n, std::max(a + 1, n * static_cast<std::size_t>(col + 1) /
                                                           static_cast<std::size_t>(inner)));
    const auto first = values.begin() + static_cast<std::ptrdiff_t>(a);
    const auto last = values.begin() + static_cast<std::ptrdiff_t>(b);
    double mn = *std::min_element(first, last), mx = *std::max_element(first, last);
    if (previous) {  // join to the previous column
      mn = std::min(mn, *previous);
      mx = std::max(mx, *previous);
    }
    canvas.vline(left + 1 + col, to_y(mn), to_y(mx), colour);
    previous = values[b - 1];
  }
}

}  // namespace

bool plot_available() {
#ifdef EVSEG_HAVE_PNG
  return true;
#else
  return false;
#endif
}

void write_loss_plot(const std::filesystem::path& path, std::span<const LossSample> samples) {
#ifdef EVSEG_HAVE_PNG
  std::vector<double> pred, mw;
  for (const auto& s : samples) {
    pred.push_back(s.pred_loss);
    mw.push_back(s.mw_loss);
  }
  Canvas canvas(kWidth, 2 * kPanelHeight);
  draw_panel(canvas, 0, pred, {31, 119, 180});
  draw_panel(canvas, kPanelHeight, mw, {214, 39, 40});

  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("failed writing " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(canvas.width), static_cast<png_uint_32>(canvas.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < canvas.height; ++y)
    png_write_row(png, &canvas.px[static_cast<std::size_t>(y) * canvas.width * 3]);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw IoError("failed writing " + path.string());
#else
  (void)path;
  (void)samples;
  throw ContractError("plot: built without PNG support");
#endif
}

}  // namespace evseg::cli
