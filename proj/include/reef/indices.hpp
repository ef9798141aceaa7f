#pragma once

#include "reef/audio_io.hpp"
#include "reef/dsp.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace reef {

enum class IndexKind { spl_low, spl_high, aci_low, snap_rate };

std::string to_string(IndexKind kind);
IndexKind parse_index_kind(const std::string& text);
bool is_decibel(IndexKind kind);

// Unit label for the CSV `units` column. Uncalibrated SPL is relative to
// digital full scale.
std::string units_of(IndexKind kind, bool relative_db);

struct IndexPoint {
  Timestamp time;
  double value = 0.0;
};

// Values of one index at one site, in strictly increasing time order.
struct IndexSeries {
  std::string site_id;
  IndexKind kind = IndexKind::spl_low;
  std::vector<IndexPoint> points;
  bool denoised = false;
  bool relative_db = false;

  void validate() const;
};

// Sound pressure level; `relative` marks dB re digital full scale.
struct Level {
  double db = 0.0;
  bool relative = false;
};

// 20 log10(rms of the band-filtered clip / 1 µPa). An all-zero band
// output has no level and yields nullopt. Requires at least 1 s of audio.
std::optional<Level> spl(const AudioClip& clip, const BandSpec& band);

// Level of already band-limited samples (no filtering).
std::optional<Level> spl_unfiltered(const AudioClip& clip);

struct AciParams {
  double window_s = 0.128;
  double overlap = 0.5;
  WindowKind window = WindowKind::hann;
  double segment_s = 5.0;
};

// Number of spectrogram steps covering `segment_s` seconds (floor).
std::size_t aci_segment_steps(const Spectrogram& spec, double segment_s);

// Acoustic complexity index over the bins whose centre frequency lies in
// [band.f_lo, band.f_hi]. Steps are grouped into consecutive segments of
// `segment_len_steps` (a trailing partial segment is ignored). Within a
// segment the first step has no predecessor, and a segment whose
// intensities sum to zero contributes 0.
double aci(const Spectrogram& spec, const BandSpec& band, std::size_t segment_len_steps);

// Spectrogram + ACI with the given parameters.
double aci(const AudioClip& clip, const BandSpec& band, const AciParams& params = {});

struct SnapParams {
  double percentile = 99.9;
  double refractory_s = 0.002;
  // Applied before the envelope when set; the default uses the full signal.
  std::optional<BandSpec> prefilter;
};

struct SnapEvents {
  std::vector<double> times;           // seconds from clip start
  std::vector<double> envelope_peaks;  // clip units (µPa when calibrated)
  double threshold_used = 0.0;
};

// Percentile with linear interpolation between order statistics.
double percentile(std::span<const double> values, double pct);

// Strong-snap detection on the Hilbert envelope. The threshold is the
// given percentile of the clip's envelope. Envelope samples strictly above
// it are grouped into excursions; samples closer than the refractory gap
// belong to the same excursion, and each excursion yields one event at its
// envelope maximum. Events are therefore local maxima above threshold
// separated by at least the gap.
SnapEvents detect_snaps(const AudioClip& clip, const SnapParams& params = {});

// Event count divided by duration.
double snap_rate(const SnapEvents& events, double duration_s);

// Mean of index values; decibel kinds are averaged as power.
double mean_index_value(std::span<const double> values, IndexKind kind);

struct DielProfile {
  int bin_minutes = 60;
  std::vector<std::optional<double>> means;  // 1440 / bin_minutes bins
  std::vector<std::size_t> counts;

  std::size_t bins() const { return means.size(); }
};

// Per time-of-day bin mean over all days. An empty series gives a profile
// whose bins are all empty.
DielProfile diel_profile(const IndexSeries& series, int bin_minutes = 60);

struct DateHourMatrix {
  std::vector<std::chrono::sys_days> dates;  // every date first..last
  std::vector<std::array<std::optional<double>, 24>> cells;
};

// Per (UTC date, hour) mean; cells without data stay empty.
DateHourMatrix date_hour_matrix(const IndexSeries& series);

struct DailyValue {
  std::chrono::sys_days date;
  double value = 0.0;
  std::size_t count = 0;
};

// Per-date mean of the series (power-domain for dB kinds).
std::vector<DailyValue> daily_means(const IndexSeries& series);

// Index CSV: site_id, timestamp_iso8601, index_kind, value, units,
// denoised_flag. Rows are written series by series in the given order.
void write_index_csv(const std::filesystem::path& path, const std::vector<IndexSeries>& series);
std::string index_csv_text(const std::vector<IndexSeries>& series);

// Groups rows into series keyed by (site, kind, denoised), sorted by that
// key, with points sorted by time.
std::vector<IndexSeries> read_index_csv(const std::filesystem::path& path);

struct ClipIndices {
  std::optional<Level> spl_low;
  std::optional<Level> spl_high;
  double aci_low = 0.0;
  double snap_rate = 0.0;
  std::size_t snap_count = 0;
};

struct IndexConfig {
  BandSpec low = low_band();
  BandSpec high = high_band();
  AciParams aci;
  SnapParams snaps;
};

// All four indices for one analysis segment.
ClipIndices compute_indices(const AudioClip& clip, const IndexConfig& cfg = {});

}  // namespace reef
