#include "reef/report.hpp"

#include "reef/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>

namespace reef {

namespace fs = std::filesystem;
using plot::Anchor;
using plot::Axes;
using plot::Canvas;
using plot::Rgb;

std::string to_string(FigureKind kind) {
  switch (kind) {
    case FigureKind::diel: return "diel";
    case FigureKind::heatmap: return "heatmap";
    case FigureKind::monthly: return "monthly";
    case FigureKind::roc: return "roc";
    case FigureKind::correlation: return "correlation";
  }
  return "?";
}

FigureKind parse_figure_kind(const std::string& text) {
  for (auto k : {FigureKind::diel, FigureKind::heatmap, FigureKind::monthly, FigureKind::roc,
                 FigureKind::correlation}) {
    if (to_string(k) == text) return k;
  }
  throw InvalidArgument(fmt::format("unknown figure kind '{}'", text));
}

std::string to_string(ImageFormat f) { return f == ImageFormat::svg ? "svg" : "png"; }

ImageFormat parse_image_format(const std::string& text) {
  if (text == "svg") return ImageFormat::svg;
  if (text == "png") return ImageFormat::png;
  throw InvalidArgument(fmt::format("unknown image format '{}'", text));
}

namespace {

std::string opt_field(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::string series_label(const IndexSeries& s) {
  return s.denoised ? s.site_id + " (denoised)" : s.site_id;
}

std::string axis_label(IndexKind kind, bool relative) {
  if (is_decibel(kind) && relative) return to_string(kind) + " [dB re FS, relative]";
  return fmt::format("{} [{}]", to_string(kind), units_of(kind, relative));
}

std::vector<const IndexSeries*> of_kind(const std::vector<IndexSeries>& series, IndexKind kind) {
  std::vector<const IndexSeries*> out;
  for (const auto& s : series) {
    if (s.kind == kind) out.push_back(&s);
  }
  return out;
}

bool any_relative(const std::vector<const IndexSeries*>& series) {
  return std::any_of(series.begin(), series.end(), [](const IndexSeries* s) { return s->relative_db; });
}

// Polyline pieces broken at missing values.
void broken_line(Canvas& c, const Axes& ax, const std::vector<std::pair<double, std::optional<double>>>& pts,
                 Rgb color, bool dashed = false) {
  std::vector<plot::Pt> run;
  auto flush = [&] {
    if (run.size() == 1) c.circle(run[0].x, run[0].y, 2.5, color);
    else if (run.size() > 1) c.line(run, color, 2.0, dashed);
    run.clear();
  };
  for (const auto& [x, y] : pts) {
    if (!y) {
      flush();
      continue;
    }
    run.push_back(ax.map(x, *y));
  }
  flush();
}

}  // namespace

FigureData diel_figure(const std::vector<IndexSeries>& series, IndexKind kind, int bin_minutes) {
  const auto sel = of_kind(series, kind);
  FigureData fig;
  fig.name = "diel_" + to_string(kind);
  fig.table.header = {"site_id", "index_kind", "denoised_flag", "hour", "mean", "count"};
  std::vector<std::vector<std::pair<double, std::optional<double>>>> lines;
  std::vector<double> all;
  for (const IndexSeries* s : sel) {
    const DielProfile prof = diel_profile(*s, bin_minutes);
    lines.emplace_back();
    for (std::size_t b = 0; b < prof.bins(); ++b) {
      const double hour = static_cast<double>(b) * bin_minutes / 60.0;
      lines.back().emplace_back(hour, prof.means[b]);
      if (prof.means[b]) all.push_back(*prof.means[b]);
      fig.table.rows.push_back({s->site_id, to_string(kind), s->denoised ? "1" : "0",
                                format_double(hour), opt_field(prof.means[b]),
                                std::to_string(prof.counts[b])});
    }
  }
  Axes ax;
  ax.x0 = 0.0;
  ax.x1 = 24.0;
  std::tie(ax.y0, ax.y1) = plot::data_range(all);
  std::vector<std::pair<double, std::string>> xt;
  for (int h = 0; h <= 24; h += 3) xt.emplace_back(h, std::to_string(h));
  ax.draw(fig.canvas, "Diel profile: " + to_string(kind), "hour of day (UTC)",
          axis_label(kind, any_relative(sel)), xt);
  std::vector<std::pair<std::string, Rgb>> keys;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    broken_line(fig.canvas, ax, lines[i], plot::palette(i));
    keys.emplace_back(series_label(*sel[i]), plot::palette(i));
  }
  plot::legend(fig.canvas, ax, keys);
  return fig;
}

FigureData heatmap_figure(const IndexSeries& s) {
  const DateHourMatrix m = date_hour_matrix(s);
  FigureData fig;
  fig.name = fmt::format("heatmap_{}_{}{}", s.site_id, to_string(s.kind), s.denoised ? "_denoised" : "");
  fig.table.header = {"site_id", "index_kind", "denoised_flag", "date", "hour", "value"};
  std::vector<double> all;
  for (std::size_t d = 0; d < m.dates.size(); ++d) {
    for (int h = 0; h < 24; ++h) {
      const auto& v = m.cells[d][static_cast<std::size_t>(h)];
      if (v) all.push_back(*v);
      fig.table.rows.push_back({s.site_id, to_string(s.kind), s.denoised ? "1" : "0",
                                format_date(m.dates[d]), std::to_string(h), opt_field(v)});
    }
  }
  double lo = 0.0, hi = 1.0;
  if (!all.empty()) {
    lo = *std::min_element(all.begin(), all.end());
    hi = *std::max_element(all.begin(), all.end());
  }
  Axes ax;
  ax.width = 600;
  ax.x0 = 0.0;
  ax.x1 = 24.0;
  ax.y0 = static_cast<double>(m.dates.size());
  ax.y1 = 0.0;
  if (m.dates.empty()) ax.y0 = 1.0;
  const double cell_h = ax.height / std::max<double>(1.0, static_cast<double>(m.dates.size()));
  for (std::size_t d = 0; d < m.dates.size(); ++d) {
    for (int h = 0; h < 24; ++h) {
      const auto& v = m.cells[d][static_cast<std::size_t>(h)];
      const Rgb color = v ? plot::colormap(hi > lo ? (*v - lo) / (hi - lo) : 0.5) : plot::kNoData;
      fig.canvas.rect(ax.px(h), ax.top + cell_h * static_cast<double>(d), ax.width / 24.0 + 0.01, cell_h + 0.01, color);
    }
  }
  std::vector<std::pair<double, std::string>> xt, yt;
  for (int h = 0; h <= 24; h += 3) xt.emplace_back(h, std::to_string(h));
  const std::size_t stride = std::max<std::size_t>(1, m.dates.size() / 10);
  for (std::size_t d = 0; d < m.dates.size(); d += stride) {
    yt.emplace_back(static_cast<double>(d) + 0.5, format_date(m.dates[d]));
  }
  ax.draw(fig.canvas, fmt::format("{} at {}", to_string(s.kind), series_label(s)), "hour of day (UTC)", "", xt, yt);
  // colour key
  const double kx = ax.left + ax.width + 20, ky = ax.top;
  for (int i = 0; i < 50; ++i) {
    fig.canvas.rect(kx, ky + ax.height * 0.8 * (1.0 - (i + 1) / 50.0), 18, ax.height * 0.8 / 50.0 + 0.01,
                    plot::colormap(i / 49.0));
  }
  fig.canvas.text(kx + 22, ky + 10, plot::tick_label(hi), 10);
  fig.canvas.text(kx + 22, ky + ax.height * 0.8, plot::tick_label(lo), 10);
  fig.canvas.rect(kx, ky + ax.height * 0.88, 18, 12, plot::kNoData);
  fig.canvas.text(kx + 22, ky + ax.height * 0.88 + 10, "no data", 10);
  fig.canvas.text(kx, ky + ax.height + 30, axis_label(s.kind, s.relative_db), 10);
  return fig;
}

FigureData monthly_figure(const std::vector<IndexSeries>& series, IndexKind kind, Diagnostics* diag) {
  const auto sel = of_kind(series, kind);
  FigureData fig;
  fig.name = "monthly_" + to_string(kind);
  fig.table.header = {"site_id", "index_kind", "denoised_flag", "month", "mean",
                      "count",   "fit_value",  "fit_A",         "fit_B", "fit_phi"};
  struct Line {
    std::vector<std::pair<double, std::optional<double>>> data, fit;
  };
  std::vector<Line> lines;
  std::vector<double> all;
  for (const IndexSeries* s : sel) {
    std::map<unsigned, std::vector<double>> months;
    for (const auto& p : s->points) months[month_of(day_of(p.time))].push_back(p.value);
    std::array<std::optional<double>, 12> mean{};
    std::vector<CyclicObservation> obs;
    for (const auto& [m, v] : months) {
      mean[m - 1] = mean_index_value(v, kind);
      obs.push_back({month_midpoint_day(m), *mean[m - 1]});
    }
    std::optional<CyclicFit> fit;
    try {
      if (!obs.empty()) fit = fit_cyclic(obs);
    } catch (const InvalidArgument& e) {
      warn(diag, fmt::format("monthly {} {}: no cyclic fit ({})", to_string(kind), series_label(*s), e.what()));
    }
    Line line;
    for (unsigned m = 1; m <= 12; ++m) {
      std::optional<double> fv;
      if (fit) fv = fit->evaluate(month_midpoint_day(m));
      line.data.emplace_back(m, mean[m - 1]);
      line.fit.emplace_back(m, fv);
      if (mean[m - 1]) all.push_back(*mean[m - 1]);
      if (fv) all.push_back(*fv);
      fig.table.rows.push_back({s->site_id, to_string(kind), s->denoised ? "1" : "0", std::to_string(m),
                                opt_field(mean[m - 1]), std::to_string(months.count(m) ? months[m].size() : 0),
                                opt_field(fv), fit ? format_double(fit->A) : "",
                                fit ? format_double(fit->B) : "", fit ? opt_field(fit->phi) : ""});
    }
    lines.push_back(std::move(line));
  }
  Axes ax;
  ax.x0 = 0.5;
  ax.x1 = 12.5;
  std::tie(ax.y0, ax.y1) = plot::data_range(all);
  static const char* names[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  std::vector<std::pair<double, std::string>> xt;
  for (int m = 1; m <= 12; ++m) xt.emplace_back(m, names[m - 1]);
  ax.draw(fig.canvas, "Monthly mean: " + to_string(kind), "month",
          axis_label(kind, any_relative(sel)), xt);
  std::vector<std::pair<std::string, Rgb>> keys;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    broken_line(fig.canvas, ax, lines[i].data, plot::palette(i));
    for (const auto& [x, y] : lines[i].data) {
      if (y) fig.canvas.circle(ax.px(x), ax.py(*y), 3.0, plot::palette(i));
    }
    broken_line(fig.canvas, ax, lines[i].fit, plot::palette(i), true);
    keys.emplace_back(series_label(*sel[i]), plot::palette(i));
  }
  plot::legend(fig.canvas, ax, keys);
  return fig;
}

FigureData roc_figure(const std::vector<RocCurve>& curves) {
  std::vector<const RocCurve*> sel;
  for (const auto& c : curves) {
    if (c.condition.find('/') == std::string::npos) sel.push_back(&c);
  }
  if (sel.empty()) {
    for (const auto& c : curves) sel.push_back(&c);
  }
  FigureData fig;
  fig.name = "roc";
  fig.table.header = {"condition", "snr_db", "fpr", "tpr", "auc"};
  Axes ax;
  ax.width = 420;
  ax.height = 420;
  ax.left = 90;
  fig.canvas.width = 760;
  fig.canvas.height = 540;
  ax.draw(fig.canvas, "ROC", "false positive rate", "true positive rate");
  fig.canvas.line({ax.map(0, 0), ax.map(1, 1)}, {150, 150, 150}, 1.0, true);
  std::vector<std::pair<std::string, Rgb>> keys;
  for (std::size_t i = 0; i < sel.size(); ++i) {
    const RocCurve& c = *sel[i];
    std::vector<plot::Pt> pts;
    for (const auto& p : c.points) {
      if (!p.tpr || !p.fpr) continue;
      pts.push_back(ax.map(*p.fpr, *p.tpr));
      fig.table.rows.push_back({c.condition, opt_field(c.snr_db), format_double(*p.fpr),
                                format_double(*p.tpr), opt_field(c.auc)});
    }
    const Rgb color = plot::palette(i);
    if (!pts.empty()) fig.canvas.line(pts, color, 2.0, c.condition == "noisy");
    std::string label = c.condition;
    if (c.snr_db) label += fmt::format(" {:g} dB", *c.snr_db);
    if (c.auc) label += fmt::format(" AUC={:.3f}", *c.auc);
    keys.emplace_back(label, color);
  }
  // legend to the right of the square plot
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const double y = ax.top + 14 + 16.0 * static_cast<double>(i);
    fig.canvas.line({{ax.left + ax.width + 15, y - 4}, {ax.left + ax.width + 33, y - 4}}, keys[i].second, 2.5);
    fig.canvas.text(ax.left + ax.width + 38, y, keys[i].first, 10);
  }
  return fig;
}

FigureData correlation_figure(const std::vector<CorrelationCsvRow>& rows) {
  FigureData fig;
  fig.name = "correlation";
  fig.table.header = {"label", "index_kind", "reef_parameter", "mode", "site_id", "r", "tier"};
  std::vector<const CorrelationCsvRow*> sel;
  for (const auto& r : rows) {
    if (r.r) sel.push_back(&r);
  }
  fig.canvas.width = std::max(800.0, 160.0 + 28.0 * static_cast<double>(sel.size()));
  Axes ax;
  ax.width = fig.canvas.width - 120;
  ax.height = 300;
  ax.x0 = 0.0;
  ax.x1 = std::max<double>(1.0, static_cast<double>(sel.size()));
  ax.y0 = -1.0;
  ax.y1 = 1.0;
  ax.draw(fig.canvas, "Correlation with reef parameters", "", "Pearson r", {{-1.0, ""}});
  fig.canvas.line({ax.map(0, 0), ax.map(ax.x1, 0)}, {0, 0, 0}, 1.0);
  std::map<std::string, std::size_t> color_of;
  for (std::size_t i = 0; i < sel.size(); ++i) {
    const auto& r = *sel[i];
    std::string label = r.index_kind + ":" + r.reef_parameter;
    if (!r.site_id.empty()) label += "@" + r.site_id;
    const auto ci = color_of.emplace(r.index_kind, color_of.size()).first->second;
    const double x = static_cast<double>(i);
    const double top = std::max(0.0, *r.r), bottom = std::min(0.0, *r.r);
    fig.canvas.rect(ax.px(x + 0.15), ax.py(top), ax.px(x + 0.85) - ax.px(x + 0.15), ax.py(bottom) - ax.py(top),
                    plot::palette(ci));
    if (r.tier != "ns" && !r.tier.empty()) {
      fig.canvas.text(ax.px(x + 0.5), *r.r >= 0 ? ax.py(top) - 4 : ax.py(bottom) + 12, r.tier, 11, Anchor::middle);
    }
    fig.canvas.text(ax.px(x + 0.5), ax.top + ax.height + 10, label, 9, Anchor::end, true);
    fig.table.rows.push_back({label, r.index_kind, r.reef_parameter, r.mode, r.site_id, format_double(*r.r), r.tier});
  }
  fig.canvas.height = ax.top + ax.height + 260;
  return fig;
}

void ReportSpec::validate() const {
  std::vector<std::string> missing;
  for (const auto& p : {index_csv, roc_csv, correlation_csv}) {
    if (p && !fs::exists(*p)) missing.push_back(p->string());
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += "\n  " + m;
    throw InputError(fmt::format("missing report input(s):{}", list));
  }
  if (!(dpi > 0.0)) throw InvalidArgument("dpi must be > 0");
}

ReportOutput render(const ReportSpec& spec) {
  spec.validate();
  std::vector<FigureKind> kinds = spec.kinds;
  if (kinds.empty()) {
    if (spec.index_csv) kinds.insert(kinds.end(), {FigureKind::diel, FigureKind::heatmap, FigureKind::monthly});
    if (spec.roc_csv) kinds.push_back(FigureKind::roc);
    if (spec.correlation_csv) kinds.push_back(FigureKind::correlation);
  }

  struct KindOutput {
    std::vector<fs::path> files;
    Diagnostics diag;
    std::optional<std::string> failure;
  };
  std::vector<KindOutput> outs(kinds.size());
  fs::create_directories(spec.out_dir);

  parallel_for(kinds.size(), spec.workers, [&](std::size_t k) {
    auto& out = outs[k];
    std::vector<FigureData> figs;
    auto need = [&](const std::optional<fs::path>& p, const char* what) {
      if (!p) {
        out.failure = fmt::format("{} figure needs a {} input", to_string(kinds[k]), what);
        out.diag.warn(*out.failure);
      }
      return p.has_value();
    };
    try {
      switch (kinds[k]) {
        case FigureKind::diel:
        case FigureKind::heatmap:
        case FigureKind::monthly: {
          if (!need(spec.index_csv, "index CSV")) break;
          const auto series = read_index_csv(*spec.index_csv);
          std::vector<IndexKind> present;
          for (const auto& s : series) {
            if (std::find(present.begin(), present.end(), s.kind) == present.end()) present.push_back(s.kind);
          }
          std::sort(present.begin(), present.end());
          if (kinds[k] == FigureKind::heatmap) {
            for (const auto& s : series) figs.push_back(heatmap_figure(s));
          } else {
            for (auto kind : present) {
              figs.push_back(kinds[k] == FigureKind::diel
                                 ? diel_figure(series, kind, spec.diel_bin_minutes)
                                 : monthly_figure(series, kind, &out.diag));
            }
          }
          break;
        }
        case FigureKind::roc:
          if (!need(spec.roc_csv, "ROC CSV")) break;
          figs.push_back(roc_figure(read_roc_csv(*spec.roc_csv)));
          break;
        case FigureKind::correlation:
          if (!need(spec.correlation_csv, "correlation CSV")) break;
          figs.push_back(correlation_figure(read_correlation_csv(*spec.correlation_csv)));
          break;
      }
    } catch (const std::exception& e) {
      out.failure = fmt::format("{} figure skipped: {}", to_string(kinds[k]), e.what());
      out.diag.warn(*out.failure);
      return;
    }
    for (const auto& f : figs) {
      const fs::path image = spec.out_dir / (f.name + "." + to_string(spec.format));
      if (spec.format == ImageFormat::svg) {
        write_file_atomic(image, plot::to_svg(f.canvas));
      } else {
        const auto bytes = plot::to_png(f.canvas, spec.dpi);
        write_file_atomic(image, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
      }
      const fs::path csv = spec.out_dir / (f.name + ".csv");
      write_csv(csv, f.table);
      out.files.push_back(image);
      out.files.push_back(csv);
    }
  });

  ReportOutput result;
  for (auto& o : outs) {
    result.files.insert(result.files.end(), o.files.begin(), o.files.end());
    for (const auto& w : o.diag.warnings()) result.diagnostics.push_back(w);
    if (o.failure) result.failed.push_back(*o.failure);
  }
  return result;
}

}  // namespace reef
