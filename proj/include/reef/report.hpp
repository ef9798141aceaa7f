#pragma once

#include "reef/csv.hpp"
#include "reef/denoise_eval.hpp"
#include "reef/indices.hpp"
#include "reef/plot.hpp"
#include "reef/stats.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace reef {

enum class FigureKind { diel, heatmap, monthly, roc, correlation };
std::string to_string(FigureKind kind);
FigureKind parse_figure_kind(const std::string& text);

enum class ImageFormat { svg, png };
std::string to_string(ImageFormat f);
ImageFormat parse_image_format(const std::string& text);

// One rendered figure and the numbers it shows.
struct FigureData {
  std::string name;  // file stem
  plot::Canvas canvas;
  CsvTable table;
};

// Diel profile of every series of `kind`, one line per series.
// CSV: site_id, index_kind, denoised_flag, hour, mean, count.
FigureData diel_figure(const std::vector<IndexSeries>& series, IndexKind kind, int bin_minutes = 60);

// Date x hour means of one series; empty cells use the no-data colour.
// CSV: site_id, index_kind, denoised_flag, date, hour, value.
FigureData heatmap_figure(const IndexSeries& series);

// Month-of-year means per series with the annual cyclic model fitted to
// them and evaluated at month midpoints (when the fit is possible).
// CSV: site_id, index_kind, denoised_flag, month, mean, count, fit_value,
// fit_A, fit_B, fit_phi.
FigureData monthly_figure(const std::vector<IndexSeries>& series, IndexKind kind,
                          Diagnostics* diag = nullptr);

// Curves with pooled conditions (no per-clip curves unless nothing else).
// CSV: condition, snr_db, fpr, tpr, auc.
FigureData roc_figure(const std::vector<RocCurve>& curves);

// One bar per defined correlation. CSV: label, index_kind,
// reef_parameter, mode, site_id, r, tier.
FigureData correlation_figure(const std::vector<CorrelationCsvRow>& rows);

struct ReportSpec {
  std::optional<std::filesystem::path> index_csv;
  std::optional<std::filesystem::path> roc_csv;
  std::optional<std::filesystem::path> correlation_csv;
  std::filesystem::path out_dir;
  std::vector<FigureKind> kinds;  // empty: every kind whose input is given
  ImageFormat format = ImageFormat::svg;
  double dpi = 96.0;
  int diel_bin_minutes = 60;
  unsigned workers = 1;

  // Throws InputError naming every referenced input that does not exist.
  void validate() const;
};

struct ReportOutput {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> diagnostics;
  std::vector<std::string> failed;  // figure kinds that could not be rendered
};

// Writes <name>.<svg|png> and <name>.csv per figure. A malformed input
// file yields a diagnostic and the figures that do not need it are still
// rendered.
ReportOutput render(const ReportSpec& spec);

}  // namespace reef
