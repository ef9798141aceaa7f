#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace reef::plot {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  std::string hex() const;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Qualitative palette, cycled.
Rgb palette(std::size_t i);
// Sequential colour map on [0, 1].
Rgb colormap(double t);
inline constexpr Rgb kNoData{200, 200, 200};

struct Pt {
  double x = 0.0, y = 0.0;
};

enum class Anchor { start, middle, end };

// Vector scene in pixel coordinates (origin top left). Rendered to SVG or
// rasterized for PNG.
struct Canvas {
  struct Line {
    std::vector<Pt> points;
    Rgb color;
    double width = 1.0;
    bool dashed = false;
  };
  struct Rect {
    double x, y, w, h;
    Rgb fill;
    std::optional<Rgb> stroke;
  };
  struct Circle {
    double x, y, r;
    Rgb fill;
  };
  struct Text {
    double x, y;
    std::string text;
    double size = 12.0;
    Anchor anchor = Anchor::start;
    bool vertical = false;  // rotated 90 degrees counter-clockwise
    Rgb color;
  };
  using Item = std::variant<Line, Rect, Circle, Text>;

  double width = 800.0;
  double height = 500.0;
  Rgb background{255, 255, 255};
  std::vector<Item> items;

  void line(std::vector<Pt> pts, Rgb color, double width = 1.5, bool dashed = false);
  void rect(double x, double y, double w, double h, Rgb fill, std::optional<Rgb> stroke = {});
  void circle(double x, double y, double r, Rgb fill);
  void text(double x, double y, std::string s, double size = 12.0, Anchor anchor = Anchor::start,
            bool vertical = false, Rgb color = {});
};

std::string to_svg(const Canvas& canvas);

struct Raster {
  int width = 0, height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel
  Rgb at(int x, int y) const;
};

// Pixel size is the canvas size times `scale`.
Raster rasterize(const Canvas& canvas, double scale = 1.0);

std::vector<unsigned char> encode_png(const Raster& raster);

// Canvas pixels are taken at 96 dpi.
std::vector<unsigned char> to_png(const Canvas& canvas, double dpi = 96.0);

// Up to about `target` round tick positions covering [lo, hi].
std::vector<double> nice_ticks(double lo, double hi, int target = 6);
std::string tick_label(double v);

// Maps data coordinates to a plot rectangle and draws axes.
struct Axes {
  double left = 80, top = 50, width = 640, height = 370;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

  Pt map(double x, double y) const;
  double px(double x) const;
  double py(double y) const;

  // Frame, ticks, grid and labels. Explicit tick lists replace the
  // automatic ones when non-empty.
  void draw(Canvas& c, const std::string& title, const std::string& x_label,
            const std::string& y_label, std::vector<std::pair<double, std::string>> x_ticks = {},
            std::vector<std::pair<double, std::string>> y_ticks = {}) const;
};

// Padded [lo, hi] for a set of values; a degenerate range is widened.
std::pair<double, double> data_range(const std::vector<double>& values, double pad_fraction = 0.05);

// Legend box in the top-right corner of the axes.
void legend(Canvas& c, const Axes& ax, const std::vector<std::pair<std::string, Rgb>>& entries);

}  // namespace reef::plot
