#include "reef/plot.hpp"

#include "reef/common.hpp"

#include <fmt/format.h>
#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

namespace reef::plot {

std::string Rgb::hex() const { return fmt::format("#{:02x}{:02x}{:02x}", r, g, b); }

Rgb palette(std::size_t i) {
  static constexpr std::array<Rgb, 10> colors = {{{31, 119, 180},
                                                   {255, 127, 14},
                                                   {44, 160, 44},
                                                   {214, 39, 40},
                                                   {148, 103, 189},
                                                   {140, 86, 75},
                                                   {227, 119, 194},
                                                   {127, 127, 127},
                                                   {188, 189, 34},
                                                   {23, 190, 207}}};
  return colors[i % colors.size()];
}

Rgb colormap(double t) {
  // dark blue -> teal -> yellow
  static constexpr std::array<Rgb, 5> stops = {
      {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0) * (stops.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
  const double f = t - static_cast<double>(i);
  auto mix = [&](std::uint8_t a, std::uint8_t b) {
    return static_cast<std::uint8_t>(std::lround(a + f * (b - a)));
  };
  return {mix(stops[i].r, stops[i + 1].r), mix(stops[i].g, stops[i + 1].g),
          mix(stops[i].b, stops[i + 1].b)};
}

void Canvas::line(std::vector<Pt> pts, Rgb color, double w, bool dashed) {
  items.emplace_back(Line{std::move(pts), color, w, dashed});
}
void Canvas::rect(double x, double y, double w, double h, Rgb fill, std::optional<Rgb> stroke) {
  items.emplace_back(Rect{x, y, w, h, fill, stroke});
}
void Canvas::circle(double x, double y, double r, Rgb fill) { items.emplace_back(Circle{x, y, r, fill}); }
void Canvas::text(double x, double y, std::string s, double size, Anchor anchor, bool vertical,
                  Rgb color) {
  items.emplace_back(Text{x, y, std::move(s), size, anchor, vertical, color});
}

namespace {

std::string num(double v) { return fmt::format("{:.2f}", v); }

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* anchor_name(Anchor a) {
  switch (a) {
    case Anchor::start: return "start";
    case Anchor::middle: return "middle";
    case Anchor::end: return "end";
  }
  return "start";
}

}  // namespace

std::string to_svg(const Canvas& c) {
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
      num(c.width), num(c.height), num(c.width), num(c.height));
  out += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n",
                     num(c.width), num(c.height), c.background.hex());
  for (const auto& item : c.items) {
    if (const auto* l = std::get_if<Canvas::Line>(&item)) {
      std::string pts;
      for (const auto& p : l->points) pts += fmt::format("{}{},{}", pts.empty() ? "" : " ", num(p.x), num(p.y));
      out += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{}\"{}/>\n",
                         pts, l->color.hex(), num(l->width),
                         l->dashed ? " stroke-dasharray=\"6,4\"" : "");
    } else if (const auto* r = std::get_if<Canvas::Rect>(&item)) {
      out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"{}/>\n",
                         num(r->x), num(r->y), num(r->w), num(r->h), r->fill.hex(),
                         r->stroke ? fmt::format(" stroke=\"{}\"", r->stroke->hex()) : "");
    } else if (const auto* ci = std::get_if<Canvas::Circle>(&item)) {
      out += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\"/>\n", num(ci->x),
                         num(ci->y), num(ci->r), ci->fill.hex());
    } else if (const auto* t = std::get_if<Canvas::Text>(&item)) {
      out += fmt::format(
          "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"{}\" text-anchor=\"{}\" "
          "fill=\"{}\"{}>{}</text>\n",
          num(t->x), num(t->y), num(t->size), anchor_name(t->anchor), t->color.hex(),
          t->vertical ? fmt::format(" transform=\"rotate(-90 {} {})\"", num(t->x), num(t->y)) : "",
          xml_escape(t->text));
    }
  }
  out += "</svg>\n";
  return out;
}

Rgb Raster::at(int x, int y) const {
  const auto i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
  return {rgb[i], rgb[i + 1], rgb[i + 2]};
}

namespace {

// 5x7 bitmap glyphs, rows top to bottom, bit 4 leftmost.
const std::map<char, std::array<std::uint8_t, 7>>& font() {
  static const std::map<char, std::array<std::uint8_t, 7>> f = {
      {' ', {0, 0, 0, 0, 0, 0, 0}},
      {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
      {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
      {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
      {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
      {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
      {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
      {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
      {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
      {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
      {'A', {0x0E, 0x11, 0x11, 0x11, 0x1F, 0x11, 0x11}},
      {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
      {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
      {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
      {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
      {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
      {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
      {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
      {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
      {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
      {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
      {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
      {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
      {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
      {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
      {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
      {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
      {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
      {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
      {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
      {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
      {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}},
      {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
      {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}},
      {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
      {'.', {0, 0, 0, 0, 0, 0x0C, 0x0C}},
      {',', {0, 0, 0, 0, 0x0C, 0x04, 0x08}},
      {'-', {0, 0, 0, 0x1F, 0, 0, 0}},
      {'+', {0, 0x04, 0x04, 0x1F, 0x04, 0x04, 0}},
      {':', {0, 0x0C, 0x0C, 0, 0x0C, 0x0C, 0}},
      {'/', {0, 0x01, 0x02, 0x04, 0x08, 0x10, 0}},
      {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
      {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
      {'%', {0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03}},
      {'_', {0, 0, 0, 0, 0, 0, 0x1F}},
      {'=', {0, 0, 0x1F, 0, 0x1F, 0, 0}},
      {'*', {0, 0x04, 0x15, 0x0E, 0x15, 0x04, 0}},
      {'<', {0x02, 0x04, 0x08, 0x10, 0x08, 0x04, 0x02}},
      {'>', {0x08, 0x04, 0x02, 0x01, 0x02, 0x04, 0x08}},
      {'\'', {0x04, 0x04, 0x08, 0, 0, 0, 0}},
      {'|', {0x04, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
  };
  return f;
}

class Painter {
 public:
  Painter(int w, int h, Rgb bg) : r_{w, h, {}} {
    r_.rgb.resize(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3);
    for (std::size_t i = 0; i < r_.rgb.size(); i += 3) {
      r_.rgb[i] = bg.r;
      r_.rgb[i + 1] = bg.g;
      r_.rgb[i + 2] = bg.b;
    }
  }

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= r_.width || y >= r_.height) return;
    const auto i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(r_.width) + static_cast<std::size_t>(x)) * 3;
    r_.rgb[i] = c.r;
    r_.rgb[i + 1] = c.g;
    r_.rgb[i + 2] = c.b;
  }

  void fill_rect(double x, double y, double w, double h, Rgb c) {
    const int x0 = static_cast<int>(std::lround(x)), y0 = static_cast<int>(std::lround(y));
    const int x1 = static_cast<int>(std::lround(x + w)), y1 = static_cast<int>(std::lround(y + h));
    for (int yy = std::max(0, y0); yy < std::min(r_.height, y1); ++yy) {
      for (int xx = std::max(0, x0); xx < std::min(r_.width, x1); ++xx) set(xx, yy, c);
    }
  }

  void disc(double cx, double cy, double rad, Rgb c) {
    rad = std::max(rad, 0.5);
    const int x0 = static_cast<int>(std::floor(cx - rad)), x1 = static_cast<int>(std::ceil(cx + rad));
    const int y0 = static_cast<int>(std::floor(cy - rad)), y1 = static_cast<int>(std::ceil(cy + rad));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
        if (dx * dx + dy * dy <= rad * rad) set(x, y, c);
      }
    }
  }

  void segment(Pt a, Pt b, double w, Rgb c, bool dashed, double& dash_pos) {
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const int steps = std::max(1, static_cast<int>(std::ceil(len * 2.0)));
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      const double pos = dash_pos + t * len;
      if (dashed && std::fmod(pos, 10.0 * w / 1.5) > 6.0 * w / 1.5) continue;
      disc(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), w / 2.0, c);
    }
    dash_pos += len;
  }

  void glyphs(double x, double y, const std::string& s, double size, Anchor anchor, bool vertical, Rgb c) {
    const double px = size / 9.0;  // 7 rows plus spacing
    const double advance = 6.0 * px;
    const double total = advance * static_cast<double>(s.size());
    double offset = anchor == Anchor::start ? 0.0 : anchor == Anchor::middle ? -total / 2 : -total;
    for (char ch : s) {
      char key = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      const auto& f = font();
      auto it = f.find(key);
      for (int row = 0; row < 7; ++row) {
        const std::uint8_t bits = it == f.end() ? (row == 0 || row == 6 ? 0x1F : 0x11) : it->second[static_cast<std::size_t>(row)];
        for (int col = 0; col < 5; ++col) {
          if (!(bits & (0x10 >> col))) continue;
          // baseline at y; glyph occupies 7 rows above it
          const double gx = offset + col * px;
          const double gy = (row - 7) * px;
          if (vertical) fill_rect(x + gy, y - gx - px, px, px, c);
          else fill_rect(x + gx, y + gy, px, px, c);
        }
      }
      offset += advance;
    }
  }

  Raster take() { return std::move(r_); }

 private:
  Raster r_;
};

}  // namespace

Raster rasterize(const Canvas& c, double scale) {
  if (!(scale > 0.0)) throw InvalidArgument("rasterize: scale must be > 0");
  Painter p(static_cast<int>(std::lround(c.width * scale)), static_cast<int>(std::lround(c.height * scale)),
            c.background);
  for (const auto& item : c.items) {
    if (const auto* l = std::get_if<Canvas::Line>(&item)) {
      double dash = 0.0;
      for (std::size_t i = 0; i + 1 < l->points.size(); ++i) {
        const Pt a{l->points[i].x * scale, l->points[i].y * scale};
        const Pt b{l->points[i + 1].x * scale, l->points[i + 1].y * scale};
        p.segment(a, b, l->width * scale, l->color, l->dashed, dash);
      }
      if (l->points.size() == 1) p.disc(l->points[0].x * scale, l->points[0].y * scale, l->width * scale / 2, l->color);
    } else if (const auto* r = std::get_if<Canvas::Rect>(&item)) {
      p.fill_rect(r->x * scale, r->y * scale, r->w * scale, r->h * scale, r->fill);
      if (r->stroke) {
        double dash = 0.0;
        const double x0 = r->x * scale, y0 = r->y * scale, x1 = (r->x + r->w) * scale, y1 = (r->y + r->h) * scale;
        const std::array<Pt, 5> pts = {{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}}};
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) p.segment(pts[i], pts[i + 1], scale, *r->stroke, false, dash);
      }
    } else if (const auto* ci = std::get_if<Canvas::Circle>(&item)) {
      p.disc(ci->x * scale, ci->y * scale, ci->r * scale, ci->fill);
    } else if (const auto* t = std::get_if<Canvas::Text>(&item)) {
      p.glyphs(t->x * scale, t->y * scale, t->text, t->size * scale, t->anchor, t->vertical, t->color);
    }
  }
  return p.take();
}

namespace {

void png_append(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

void png_flush_noop(png_structp) {}

}  // namespace

std::vector<unsigned char> encode_png(const Raster& raster) {
  std::vector<unsigned char> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("PNG encoding failed");
  }
  png_set_write_fn(png, &out, png_append, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(raster.width), static_cast<png_uint_32>(raster.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < raster.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(raster.rgb.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(raster.width) * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

std::vector<unsigned char> to_png(const Canvas& canvas, double dpi) {
  return encode_png(rasterize(canvas, dpi / 96.0));
}

std::vector<double> nice_ticks(double lo, double hi, int target) {
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) return {lo};
  const double raw = (hi - lo) / std::max(1, target);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> ticks;
  for (double v = std::ceil(lo / step - 1e-9) * step; v <= hi + step * 1e-9; v += step) {
    ticks.push_back(std::abs(v) < step * 1e-9 ? 0.0 : v);
  }
  return ticks;
}

std::string tick_label(double v) {
  std::string s = fmt::format("{:.4g}", v);
  return s == "-0" ? "0" : s;
}

double Axes::px(double x) const { return left + (x - x0) / (x1 - x0) * width; }
double Axes::py(double y) const { return top + height - (y - y0) / (y1 - y0) * height; }
Pt Axes::map(double x, double y) const { return {px(x), py(y)}; }

void Axes::draw(Canvas& c, const std::string& title, const std::string& x_label,
                const std::string& y_label, std::vector<std::pair<double, std::string>> x_ticks,
                std::vector<std::pair<double, std::string>> y_ticks) const {
  const Rgb grid{225, 225, 225}, ink{0, 0, 0};
  if (x_ticks.empty()) {
    for (double v : nice_ticks(x0, x1)) x_ticks.emplace_back(v, tick_label(v));
  }
  if (y_ticks.empty()) {
    for (double v : nice_ticks(y0, y1)) y_ticks.emplace_back(v, tick_label(v));
  }
  for (const auto& [v, label] : x_ticks) {
    if (v < std::min(x0, x1) || v > std::max(x0, x1)) continue;
    c.line({{px(v), top}, {px(v), top + height}}, grid, 1.0);
    c.line({{px(v), top + height}, {px(v), top + height + 5}}, ink, 1.0);
    c.text(px(v), top + height + 18, label, 11, Anchor::middle);
  }
  for (const auto& [v, label] : y_ticks) {
    if (v < std::min(y0, y1) || v > std::max(y0, y1)) continue;
    c.line({{left, py(v)}, {left + width, py(v)}}, grid, 1.0);
    c.line({{left - 5, py(v)}, {left, py(v)}}, ink, 1.0);
    c.text(left - 8, py(v) + 4, label, 11, Anchor::end);
  }
  c.line({{left, top}, {left + width, top}, {left + width, top + height}, {left, top + height}, {left, top}},
         ink, 1.0);
  c.text(left + width / 2, top - 15, title, 15, Anchor::middle);
  c.text(left + width / 2, top + height + 40, x_label, 12, Anchor::middle);
  c.text(left - 55, top + height / 2, y_label, 12, Anchor::middle, true);
}

std::pair<double, double> data_range(const std::vector<double>& values, double pad_fraction) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!std::isfinite(lo)) return {0.0, 1.0};
  if (hi - lo <= 1e-12 * std::max(1.0, std::abs(lo))) {
    const double w = std::max(1.0, std::abs(lo) * 0.05);
    return {lo - w, hi + w};
  }
  const double pad = (hi - lo) * pad_fraction;
  return {lo - pad, hi + pad};
}

void legend(Canvas& c, const Axes& ax, const std::vector<std::pair<std::string, Rgb>>& entries) {
  if (entries.empty()) return;
  std::size_t longest = 0;
  for (const auto& e : entries) longest = std::max(longest, e.first.size());
  const double w = 34.0 + 6.5 * static_cast<double>(longest);
  const double h = 8.0 + 16.0 * static_cast<double>(entries.size());
  const double x = ax.left + ax.width - w - 8, y = ax.top + 8;
  c.rect(x, y, w, h, {255, 255, 255}, Rgb{160, 160, 160});
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const double yy = y + 14 + 16.0 * static_cast<double>(i);
    c.line({{x + 6, yy - 4}, {x + 24, yy - 4}}, entries[i].second, 2.5);
    c.text(x + 30, yy, entries[i].first, 11);
  }
}

}  // namespace reef::plot
