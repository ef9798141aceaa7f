#pragma once

#include "reef/denoise_eval.hpp"
#include "reef/indices.hpp"
#include "reef/report.hpp"
#include "reef/stats.hpp"
#include "reef/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace reef::cli {

enum ExitCode : int { kOk = 0, kFatal = 1, kPartial = 2 };

// Default config file when --config is not given.
inline constexpr const char* kConfigEnv = "REEFPAM_CONFIG";

struct RunConfig {
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::filesystem::path out_dir = "reefpam_out";

  IndexConfig index;
  double segment_s = 60.0;

  struct Ingest {
    std::optional<std::filesystem::path> manifest;
  } ingest;

  struct Indices {
    std::optional<std::filesystem::path> manifest;
    std::vector<std::filesystem::path> inputs;
    bool denoised = false;
    std::string output = "indices.csv";
  } indices;

  struct Mix {
    std::optional<std::filesystem::path> signals;
    std::optional<std::filesystem::path> noise;
    Split split = Split::train;
    std::size_t count = 10;
    MixRecipe recipe;
    bool overwrite = false;
  } mix;

  struct Eval {
    std::optional<std::filesystem::path> manifest;
    // "gate", "identity", "dir:<path>" or "exe:<path>"
    std::string denoiser = "gate";
    std::vector<double> snr_grid;
    double snr_tolerance_db = 0.05;
    bool per_clip = false;
  } eval;

  struct Correlate {
    std::optional<std::filesystem::path> indices;
    std::optional<std::filesystem::path> transects;
    CorrelationMode mode = CorrelationMode::temporal;
    bool windowed_mean = false;
    bool denoised = false;
    ReefParameter cyclic_parameter = ReefParameter::macroalgal_cover;
  } correlate;

  struct Composite {
    std::optional<std::filesystem::path> indices;
    std::optional<std::filesystem::path> transects;
    std::optional<std::filesystem::path> design;
    CorrelationMode mode = CorrelationMode::temporal;
    bool standardize = false;
    bool denoised = false;
    IndexKind spl_kind = IndexKind::spl_low;
  } composite;

  struct Report {
    std::optional<std::filesystem::path> indices;
    std::optional<std::filesystem::path> roc;
    std::optional<std::filesystem::path> correlation;
    std::vector<FigureKind> kinds;
    ImageFormat format = ImageFormat::svg;
    double dpi = 96.0;
    int diel_bin_minutes = 60;
  } report;

  // Throws InvalidArgument when a value violates a module precondition.
  void validate() const;
};

// Strict JSON reader: unknown keys and wrong types throw InvalidArgument
// naming the offending key. Relative paths resolve against `base_dir`.
RunConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

// Entry point. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace reef::cli
