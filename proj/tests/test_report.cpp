#include "reef/report.hpp"
#include "reef/plot.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <png.h>

using namespace reef;
using reef::test::TempDir;
using reef::test::ts;

namespace {

IndexSeries hourly(const std::string& site, IndexKind kind, int days, double base, bool relative = false) {
  IndexSeries s;
  s.site_id = site;
  s.kind = kind;
  s.relative_db = relative;
  const Timestamp t0 = ts("2021-03-01T00:00:00Z");
  for (int h = 0; h < days * 24; ++h) {
    if (h % 24 == 7) continue;  // a gap every day
    s.points.push_back({t0 + std::chrono::hours{h}, base + std::sin(h * 2 * std::numbers::pi / 24)});
  }
  return s;
}

// Decodes with libpng and returns (width, height).
std::pair<int, int> png_size(const std::vector<unsigned char>& bytes) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  EXPECT_TRUE(png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()));
  const std::pair<int, int> wh{static_cast<int>(img.width), static_cast<int>(img.height)};
  png_image_free(&img);
  return wh;
}

}  // namespace

TEST(Plot, NiceTicksCoverRange) {
  const auto t = plot::nice_ticks(0.13, 9.7);
  ASSERT_GE(t.size(), 3u);
  EXPECT_LE(t.front(), 0.13 + 1e-12 + (t[1] - t[0]));
  EXPECT_GE(t.back() + (t[1] - t[0]), 9.7);
  for (std::size_t i = 1; i < t.size(); ++i) EXPECT_NEAR(t[i] - t[i - 1], t[1] - t[0], 1e-9);
  EXPECT_EQ(plot::tick_label(0.5), "0.5");
}

TEST(Plot, SvgIsDeterministicAndEscaped) {
  plot::Canvas c;
  c.text(10, 10, "a < b & c");
  c.line({{0, 0}, {10, 10}}, plot::palette(0));
  const std::string svg = plot::to_svg(c);
  EXPECT_EQ(svg, plot::to_svg(c));
  EXPECT_NE(svg.find("a &lt; b &amp; c"), std::string::npos);
  EXPECT_EQ(svg.rfind("<svg", 0) == 0 || svg.rfind("<?xml", 0) == 0, true);
}

TEST(Plot, PngDecodesAtRequestedDpi) {
  plot::Canvas c;
  c.width = 100;
  c.height = 50;
  c.rect(10, 10, 20, 20, plot::Rgb{255, 0, 0});
  const auto bytes = plot::to_png(c, 192.0);
  EXPECT_EQ(png_size(bytes), (std::pair<int, int>{200, 100}));
  const auto r = plot::rasterize(c, 1.0);
  EXPECT_EQ(r.at(20, 20), (plot::Rgb{255, 0, 0}));
  EXPECT_EQ(r.at(80, 40), (plot::Rgb{255, 255, 255}));
}

TEST(Figures, DielTableHasOneRowPerBin) {
  const auto f = diel_figure({hourly("A", IndexKind::spl_low, 3, 100, true), hourly("B", IndexKind::spl_low, 3, 110)},
                             IndexKind::spl_low);
  EXPECT_EQ(f.name, "diel_spl_low");
  EXPECT_EQ(f.table.header, (std::vector<std::string>{"site_id", "index_kind", "denoised_flag", "hour", "mean", "count"}));
  EXPECT_EQ(f.table.rows.size(), 48u);
  // the gap hour has no data
  const auto& gap = f.table.rows[7];
  EXPECT_EQ(gap[4], "");
  EXPECT_EQ(gap[5], "0");
  EXPECT_NE(plot::to_svg(f.canvas).find("dB re FS, relative"), std::string::npos);
}

TEST(Figures, HeatmapMarksEmptyCells) {
  const auto f = heatmap_figure(hourly("A", IndexKind::snap_rate, 2, 5));
  EXPECT_EQ(f.name, "heatmap_A_snap_rate");
  EXPECT_EQ(f.table.rows.size(), 48u);
  EXPECT_EQ(f.table.rows[7][5], "");
  EXPECT_NE(plot::to_svg(f.canvas).find(plot::kNoData.hex()), std::string::npos);
}

TEST(Figures, MonthlyOverlayFromCyclicFit) {
  IndexSeries s;
  s.site_id = "A";
  s.kind = IndexKind::aci_low;
  for (int m = 1; m <= 12; ++m) {
    const auto d = std::chrono::sys_days{std::chrono::year{2021} / std::chrono::month{static_cast<unsigned>(m)} / 15};
    const double day = month_midpoint_day(static_cast<unsigned>(m));
    s.points.push_back({std::chrono::time_point_cast<std::chrono::microseconds>(d),
                        50 + 5 * std::cos(2 * std::numbers::pi * (day - 200) / 365)});
  }
  const auto f = monthly_figure({s}, IndexKind::aci_low);
  ASSERT_EQ(f.table.rows.size(), 12u);
  const auto col = [&](const char* n) { return f.table.column(n); };
  EXPECT_NEAR(parse_double(f.table.rows[0][col("fit_A")]), 5.0, 0.1);
  EXPECT_NEAR(parse_double(f.table.rows[0][col("fit_phi")]), 200.0, 1.0);
}

TEST(Figures, RocAndCorrelation) {
  RocCurve c;
  c.condition = "noisy";
  c.snr_db = 0.0;
  c.auc = 0.75;
  c.points = {{1.0, 0.0, 0.0}, {0.5, 0.6, 0.2}, {0.0, 1.0, 1.0}};
  RocCurve clip = c;
  clip.condition = "noisy/p1";
  const auto f = roc_figure({c, clip});
  EXPECT_EQ(f.table.header, (std::vector<std::string>{"condition", "snr_db", "fpr", "tpr", "auc"}));
  EXPECT_EQ(f.table.rows.size(), 3u);

  CorrelationCsvRow r;
  r.index_kind = "snap_rate";
  r.reef_parameter = "live_coral_cover";
  r.mode = "temporal";
  r.r = 0.8;
  r.tier = "**";
  CorrelationCsvRow u = r;
  u.r.reset();
  const auto g = correlation_figure({r, u});
  EXPECT_EQ(g.table.rows.size(), 1u);
}

TEST(Render, WritesFiguresAndListsMissingInputs) {
  TempDir dir("rep");
  write_index_csv(dir / "idx.csv", {hourly("A", IndexKind::spl_low, 2, 100), hourly("A", IndexKind::snap_rate, 2, 3)});
  ReportSpec spec;
  spec.index_csv = dir / "idx.csv";
  spec.out_dir = dir / "out";
  spec.kinds = {FigureKind::diel, FigureKind::heatmap};
  spec.format = ImageFormat::png;
  const ReportOutput out = render(spec);
  EXPECT_TRUE(out.failed.empty());
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "diel_spl_low.png"));
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "diel_spl_low.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "heatmap_A_snap_rate.csv"));

  ReportSpec svg = spec;
  svg.format = ImageFormat::svg;
  svg.out_dir = dir / "svg1";
  render(svg);
  svg.out_dir = dir / "svg2";
  svg.workers = 3;
  render(svg);
  EXPECT_EQ(reef::test::slurp(dir / "svg1" / "diel_spl_low.svg"), reef::test::slurp(dir / "svg2" / "diel_spl_low.svg"));

  ReportSpec missing;
  missing.index_csv = dir / "nope.csv";
  missing.roc_csv = dir / "nope_roc.csv";
  missing.out_dir = dir / "x";
  try {
    render(missing);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("nope.csv"), std::string::npos);
    EXPECT_NE(msg.find("nope_roc.csv"), std::string::npos);
  }
}

TEST(Render, MalformedInputFailsOnlyItsFigures) {
  TempDir dir("rep");
  write_index_csv(dir / "idx.csv", {hourly("A", IndexKind::spl_low, 2, 100)});
  reef::test::spit(dir / "roc.csv", "garbage,header\n1,2\n");
  ReportSpec spec;
  spec.index_csv = dir / "idx.csv";
  spec.roc_csv = dir / "roc.csv";
  spec.out_dir = dir / "out";
  const ReportOutput out = render(spec);
  ASSERT_EQ(out.failed.size(), 1u);
  EXPECT_EQ(out.failed[0].rfind("roc", 0), 0u);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "diel_spl_low.svg"));
}
