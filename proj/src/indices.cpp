#include "reef/indices.hpp"

#include "reef/csv.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace reef {

std::string to_string(IndexKind kind) {
  switch (kind) {
    case IndexKind::spl_low: return "spl_low";
    case IndexKind::spl_high: return "spl_high";
    case IndexKind::aci_low: return "aci_low";
    case IndexKind::snap_rate: return "snap_rate";
  }
  return "?";
}

IndexKind parse_index_kind(const std::string& text) {
  for (IndexKind k : {IndexKind::spl_low, IndexKind::spl_high, IndexKind::aci_low,
                      IndexKind::snap_rate}) {
    if (to_string(k) == text) return k;
  }
  throw InputError(fmt::format("unknown index kind '{}'", text));
}

bool is_decibel(IndexKind kind) {
  return kind == IndexKind::spl_low || kind == IndexKind::spl_high;
}

std::string units_of(IndexKind kind, bool relative_db) {
  if (is_decibel(kind)) return relative_db ? "dB re FS" : "dB re 1 uPa";
  if (kind == IndexKind::snap_rate) return "snaps/s";
  return "dimensionless";
}

void IndexSeries::validate() const {
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!(points[i - 1].time < points[i].time)) {
      throw InvalidArgument(fmt::format("index series {}/{}: timestamps not strictly increasing",
                                        site_id, to_string(kind)));
    }
  }
  if (kind == IndexKind::snap_rate) {
    for (const auto& p : points) {
      if (p.value < 0.0) throw InvalidArgument("snap_rate series has a negative value");
    }
  }
}

std::optional<Level> spl_unfiltered(const AudioClip& clip) {
  clip.validate();
  const double ms = mean_square(clip.samples);
  if (!(ms > 0.0)) return std::nullopt;
  return Level{10.0 * std::log10(ms), !clip.calibrated()};
}

std::optional<Level> spl(const AudioClip& clip, const BandSpec& band) {
  clip.validate();
  if (clip.duration_s() < 1.0) throw InvalidArgument("spl: clip shorter than 1 s");
  return spl_unfiltered(bandpass(clip, band));
}

std::size_t aci_segment_steps(const Spectrogram& spec, double segment_s) {
  if (!(spec.hop_s > 0.0)) throw InvalidArgument("aci: spectrogram has no hop");
  return static_cast<std::size_t>(std::floor(segment_s / spec.hop_s + 1e-9));
}

double aci(const Spectrogram& spec, const BandSpec& band, std::size_t segment_len_steps) {
  if (segment_len_steps < 2) throw InvalidArgument("aci: segment_len_steps must be >= 2");
  std::vector<Eigen::Index> bins;
  for (std::size_t k = 0; k < spec.bins(); ++k) {
    const double f = spec.bin_frequency(k);
    if (f >= band.f_lo && f <= band.f_hi) bins.push_back(static_cast<Eigen::Index>(k));
  }
  if (bins.empty()) {
    throw InvalidArgument(fmt::format("aci: band {}-{} Hz selects no spectrogram bin",
                                      band.f_lo, band.f_hi));
  }
  const std::size_t segments = spec.steps() / segment_len_steps;
  if (segments == 0) {
    throw InvalidArgument(fmt::format("aci: {} steps do not fill one segment of {}",
                                      spec.steps(), segment_len_steps));
  }
  const auto& I = spec.intensities;
  double total = 0.0;
  for (Eigen::Index k : bins) {
    for (std::size_t j = 0; j < segments; ++j) {
      const auto first = static_cast<Eigen::Index>(j * segment_len_steps);
      const auto last = first + static_cast<Eigen::Index>(segment_len_steps);
      double diff = 0.0;
      double sum = I(k, first);
      for (Eigen::Index t = first + 1; t < last; ++t) {
        diff += std::abs(I(k, t) - I(k, t - 1));
        sum += I(k, t);
      }
      if (sum > 0.0) total += diff / sum;
    }
  }
  return total;
}

double aci(const AudioClip& clip, const BandSpec& band, const AciParams& params) {
  const Spectrogram spec = spectrogram(clip, params.window_s, params.overlap, params.window);
  return aci(spec, band, aci_segment_steps(spec, params.segment_s));
}

double percentile(std::span<const double> values, double pct) {
  if (values.empty()) throw InvalidArgument("percentile of an empty set");
  if (!(pct >= 0.0 && pct <= 100.0)) throw InvalidArgument("percentile must be in [0, 100]");
  std::vector<double> v(values.begin(), values.end());
  const double pos = pct / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  if (frac == 0.0 || lo + 1 >= v.size()) return a;
  const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
  return a + frac * (b - a);
}

SnapEvents detect_snaps(const AudioClip& clip, const SnapParams& params) {
  clip.validate();
  if (clip.duration_s() < 1.0) throw InvalidArgument("detect_snaps: clip shorter than 1 s");
  if (!(params.refractory_s >= 0.0)) throw InvalidArgument("detect_snaps: negative refractory gap");
  const Envelope env =
      params.prefilter ? hilbert_envelope(bandpass(clip, *params.prefilter)) : hilbert_envelope(clip);
  const std::vector<double>& e = env.values;

  SnapEvents out;
  out.threshold_used = percentile(e, params.percentile);
  // adjacent samples always belong to the same excursion
  const auto gap = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::llround(params.refractory_s * clip.sample_rate)));

  std::size_t best = 0;
  std::size_t last_above = 0;
  bool open = false;
  auto close = [&] {
    out.times.push_back(static_cast<double>(best) / clip.sample_rate);
    out.envelope_peaks.push_back(e[best]);
  };
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (!(e[i] > out.threshold_used)) continue;
    if (open && i - last_above >= gap) {
      close();
      open = false;
    }
    if (!open) {
      open = true;
      best = i;
    } else if (e[i] > e[best]) {
      best = i;
    }
    last_above = i;
  }
  if (open) close();
  return out;
}

double snap_rate(const SnapEvents& events, double duration_s) {
  if (!(duration_s > 0.0)) throw InvalidArgument("snap_rate: duration must be > 0");
  return static_cast<double>(events.times.size()) / duration_s;
}

double mean_index_value(std::span<const double> values, IndexKind kind) {
  if (values.empty()) throw InvalidArgument("mean of an empty set");
  if (is_decibel(kind)) {
    double acc = 0.0;
    for (double v : values) acc += std::pow(10.0, v / 10.0);
    return 10.0 * std::log10(acc / static_cast<double>(values.size()));
  }
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

DielProfile diel_profile(const IndexSeries& series, int bin_minutes) {
  if (bin_minutes <= 0 || 1440 % bin_minutes != 0) {
    throw InvalidArgument(fmt::format("diel_profile: {} does not divide 1440", bin_minutes));
  }
  const auto n = static_cast<std::size_t>(1440 / bin_minutes);
  std::vector<std::vector<double>> groups(n);
  for (const auto& p : series.points) {
    groups[static_cast<std::size_t>(minute_of_day(p.time) / bin_minutes)].push_back(p.value);
  }
  DielProfile prof;
  prof.bin_minutes = bin_minutes;
  prof.means.resize(n);
  prof.counts.resize(n);
  for (std::size_t b = 0; b < n; ++b) {
    prof.counts[b] = groups[b].size();
    if (!groups[b].empty()) prof.means[b] = mean_index_value(groups[b], series.kind);
  }
  return prof;
}

DateHourMatrix date_hour_matrix(const IndexSeries& series) {
  DateHourMatrix m;
  if (series.points.empty()) return m;
  std::map<std::pair<std::chrono::sys_days, int>, std::vector<double>> groups;
  auto first = day_of(series.points.front().time);
  auto last = first;
  for (const auto& p : series.points) {
    const auto d = day_of(p.time);
    first = std::min(first, d);
    last = std::max(last, d);
    groups[{d, hour_of_day(p.time)}].push_back(p.value);
  }
  for (auto d = first; d <= last; d += std::chrono::days{1}) {
    m.dates.push_back(d);
    m.cells.emplace_back();
  }
  for (const auto& [key, values] : groups) {
    const auto row = static_cast<std::size_t>((key.first - first).count());
    m.cells[row][static_cast<std::size_t>(key.second)] = mean_index_value(values, series.kind);
  }
  return m;
}

std::vector<DailyValue> daily_means(const IndexSeries& series) {
  std::map<std::chrono::sys_days, std::vector<double>> groups;
  for (const auto& p : series.points) groups[day_of(p.time)].push_back(p.value);
  std::vector<DailyValue> out;
  for (const auto& [d, values] : groups) {
    out.push_back({d, mean_index_value(values, series.kind), values.size()});
  }
  return out;
}

std::string index_csv_text(const std::vector<IndexSeries>& series) {
  CsvTable t;
  t.header = {"site_id", "timestamp_iso8601", "index_kind", "value", "units", "denoised_flag"};
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      t.rows.push_back({s.site_id, format_iso8601(p.time), to_string(s.kind),
                        format_double(p.value), units_of(s.kind, s.relative_db),
                        s.denoised ? "1" : "0"});
    }
  }
  return to_csv(t);
}

void write_index_csv(const std::filesystem::path& path, const std::vector<IndexSeries>& series) {
  write_file_atomic(path, index_csv_text(series));
}

std::vector<IndexSeries> read_index_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  t.require_columns({"site_id", "timestamp_iso8601", "index_kind", "value", "units",
                     "denoised_flag"});
  const auto c_site = t.column("site_id"), c_time = t.column("timestamp_iso8601"),
             c_kind = t.column("index_kind"), c_val = t.column("value"),
             c_units = t.column("units"), c_den = t.column("denoised_flag");
  std::map<std::tuple<std::string, IndexKind, bool>, IndexSeries> groups;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    auto fail = [&](const std::string& why) {
      return InputError(fmt::format("{} row {}: {}", path.string(), r + 2, why));
    };
    const auto ts = parse_iso8601(row[c_time]);
    if (!ts) throw fail(fmt::format("bad timestamp '{}'", row[c_time]));
    const IndexKind kind = parse_index_kind(row[c_kind]);
    const std::string& flag = row[c_den];
    if (flag != "0" && flag != "1" && flag != "true" && flag != "false") {
      throw fail(fmt::format("bad denoised_flag '{}'", flag));
    }
    const bool denoised = flag == "1" || flag == "true";
    auto& s = groups[{row[c_site], kind, denoised}];
    s.site_id = row[c_site];
    s.kind = kind;
    s.denoised = denoised;
    if (row[c_units] == "dB re FS") s.relative_db = true;
    s.points.push_back({*ts, parse_double(row[c_val])});
  }
  std::vector<IndexSeries> out;
  for (auto& [key, s] : groups) {
    std::stable_sort(s.points.begin(), s.points.end(),
                     [](const IndexPoint& a, const IndexPoint& b) { return a.time < b.time; });
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

ClipIndices compute_indices(const AudioClip& clip, const IndexConfig& cfg) {
  ClipIndices out;
  out.spl_low = spl(clip, cfg.low);
  out.spl_high = spl(clip, cfg.high);
  out.aci_low = aci(clip, cfg.low, cfg.aci);
  const SnapEvents ev = detect_snaps(clip, cfg.snaps);
  out.snap_count = ev.times.size();
  out.snap_rate = snap_rate(ev, clip.duration_s());
  return out;
}

}  // namespace reef
