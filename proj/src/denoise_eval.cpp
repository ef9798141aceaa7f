#include "reef/denoise_eval.hpp"

#include "reef/csv.hpp"
#include "reef/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

namespace reef {

namespace fs = std::filesystem;

Envelope normalize_envelope(const Envelope& env, Diagnostics* diag) {
  if (env.values.empty()) throw InvalidArgument("normalize_envelope: empty envelope");
  const auto [lo_it, hi_it] = std::minmax_element(env.values.begin(), env.values.end());
  const double lo = *lo_it, hi = *hi_it;
  Envelope out{std::vector<double>(env.values.size(), 0.0), env.sample_rate};
  if (!(hi > lo)) {
    warn(diag, "normalize_envelope: constant envelope, mapped to zeros");
    return out;
  }
  const double span = hi - lo;
  for (std::size_t i = 0; i < env.values.size(); ++i) out.values[i] = (env.values[i] - lo) / span;
  // exact end points regardless of rounding
  out.values[static_cast<std::size_t>(lo_it - env.values.begin())] = 0.0;
  out.values[static_cast<std::size_t>(hi_it - env.values.begin())] = 1.0;
  return out;
}

std::vector<bool> label_signal_events(const Envelope& clean_norm, double level) {
  std::vector<bool> mask(clean_norm.values.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = clean_norm.values[i] > level;
  return mask;
}

std::vector<double> default_thresholds(std::span<const double> test_values) {
  constexpr std::size_t kGrid = 512;
  constexpr std::size_t kExactLimit = 1'000'000;
  std::vector<double> t;
  t.reserve(kGrid + (test_values.size() <= kExactLimit ? test_values.size() : 0));
  for (std::size_t i = 0; i < kGrid; ++i) t.push_back(static_cast<double>(i) / (kGrid - 1));
  if (test_values.size() <= kExactLimit) {
    for (double v : test_values) {
      if (v >= 0.0 && v <= 1.0) t.push_back(v);
    }
  }
  std::sort(t.begin(), t.end(), std::greater<>());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

double auc_of(const std::vector<RocPoint>& points) {
  double area = 0.0, x = 0.0, y = 0.0;
  for (const auto& p : points) {
    if (!p.tpr || !p.fpr) continue;
    area += (*p.fpr - x) * (*p.tpr + y) / 2.0;
    x = *p.fpr;
    y = *p.tpr;
  }
  area += (1.0 - x) * y;
  return std::clamp(area, 0.0, 1.0);
}

RocCurve roc(std::span<const double> test_norm, const std::vector<bool>& mask,
             std::span<const double> thresholds) {
  if (test_norm.size() != mask.size()) {
    throw InvalidArgument(fmt::format("roc: test length {} differs from mask length {}",
                                      test_norm.size(), mask.size()));
  }
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    if (!(thresholds[i] < thresholds[i - 1])) {
      throw InvalidArgument("roc: thresholds must be strictly descending");
    }
  }
  const std::size_t n = test_norm.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return test_norm[a] < test_norm[b]; });
  std::vector<double> sorted(n);
  // positives among sorted[i..n)
  std::vector<std::size_t> pos_from(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) sorted[i] = test_norm[order[i]];
  for (std::size_t i = n; i-- > 0;) pos_from[i] = pos_from[i + 1] + (mask[order[i]] ? 1 : 0);
  const std::size_t positives = pos_from[0];
  const std::size_t negatives = n - positives;

  RocCurve curve;
  curve.samples = n;
  for (double tau : thresholds) {
    const auto idx =
        static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), tau) - sorted.begin());
    const std::size_t detected = n - idx;
    const std::size_t tp = pos_from[idx];
    const std::size_t fp = detected - tp;
    RocPoint p;
    p.threshold = tau;
    if (positives > 0) p.tpr = static_cast<double>(tp) / static_cast<double>(positives);
    if (negatives > 0) p.fpr = static_cast<double>(fp) / static_cast<double>(negatives);
    curve.points.push_back(p);
  }
  if (positives > 0 && negatives > 0) curve.auc = auc_of(curve.points);
  return curve;
}

RocCurve roc(std::span<const double> test_norm, const std::vector<bool>& mask) {
  const auto t = default_thresholds(test_norm);
  return roc(test_norm, mask, t);
}

Envelope evaluation_envelope(const AudioClip& clip, Diagnostics* diag) {
  const Envelope full = hilbert_envelope(clip);
  const auto block = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(clip.sample_rate / kEvalEnvelopeRate)));
  Envelope dec;
  dec.sample_rate = clip.sample_rate / static_cast<double>(block);
  const std::size_t blocks = full.values.size() / block;
  if (blocks == 0) throw InvalidArgument("evaluation_envelope: clip shorter than one block");
  dec.values.resize(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < block; ++i) s += full.values[b * block + i];
    dec.values[b] = s / static_cast<double>(block);
  }
  return normalize_envelope(dec, diag);
}

AudioClip DirectoryDenoiser::denoise(const fs::path& noisy_path, const AudioClip& /*noisy*/) {
  const fs::path p = dir_ / noisy_path.filename();
  if (!fs::exists(p)) throw InputError(fmt::format("denoised file {} not found", p.string()));
  return read_wav(p);
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

}  // namespace

void ExecutableDenoiser::prepare(const std::vector<fs::path>& noisy_paths) {
  std::vector<fs::path> dirs;
  for (const auto& p : noisy_paths) dirs.push_back(fs::absolute(p).parent_path());
  std::sort(dirs.begin(), dirs.end());
  dirs.erase(std::unique(dirs.begin(), dirs.end()), dirs.end());
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const fs::path out = work_dir_ / fmt::format("denoised_{:03d}", i);
    fs::create_directories(out);
    const std::string cmd = fmt::format("{} {} {}", shell_quote(program_.string()),
                                        shell_quote(dirs[i].string()), shell_quote(out.string()));
    const int status = std::system(cmd.c_str());
    if (status != 0) {
      throw InputError(fmt::format("denoiser '{}' failed with status {} on {}", program_.string(),
                                   status, dirs[i].string()));
    }
    out_dirs_[dirs[i]] = out;
  }
}

AudioClip ExecutableDenoiser::denoise(const fs::path& noisy_path, const AudioClip& /*noisy*/) {
  const auto it = out_dirs_.find(fs::absolute(noisy_path).parent_path());
  if (it == out_dirs_.end()) {
    throw InputError(fmt::format("denoiser was not run on the directory of {}", noisy_path.string()));
  }
  const fs::path p = it->second / noisy_path.filename();
  if (!fs::exists(p)) throw InputError(fmt::format("denoiser produced no {}", p.string()));
  return read_wav(p);
}

std::size_t gate_fft_size(const GateParams& params, double sample_rate) {
  if (params.n_fft > 0) return params.n_fft;
  std::size_t n = 16;
  while (static_cast<double>(n) < 0.02 * sample_rate) n *= 2;
  return n;
}

namespace {

std::vector<double> median_smooth(const std::vector<double>& v, std::size_t half) {
  if (half == 0) return v;
  std::vector<double> out(v.size()), buf;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const std::size_t lo = k >= half ? k - half : 0;
    const std::size_t hi = std::min(v.size(), k + half + 1);
    buf.assign(v.begin() + static_cast<std::ptrdiff_t>(lo), v.begin() + static_cast<std::ptrdiff_t>(hi));
    auto mid = buf.begin() + static_cast<std::ptrdiff_t>(buf.size() / 2);
    std::nth_element(buf.begin(), mid, buf.end());
    out[k] = *mid;
  }
  return out;
}

std::vector<double> profile_from_frames(const Stft& s, double quiet_fraction, std::size_t smooth) {
  const std::size_t bins = s.n_fft / 2 + 1;
  const std::size_t steps = s.frames.size();
  std::vector<double> energy(steps, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    for (const auto& c : s.frames[t]) energy[t] += std::norm(c);
  }
  std::vector<std::size_t> order(steps);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return energy[a] < energy[b]; });
  const std::size_t quiet = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(quiet_fraction * static_cast<double>(steps))), 1, steps);
  std::vector<double> floor(bins, 0.0);
  for (std::size_t q = 0; q < quiet; ++q) {
    const auto& f = s.frames[order[q]];
    for (std::size_t k = 0; k < bins; ++k) floor[k] += std::norm(f[k]);
  }
  for (double& v : floor) v /= static_cast<double>(quiet);
  return median_smooth(floor, smooth);
}

void check_gate_params(const GateParams& p) {
  if (!(p.quiet_fraction > 0.0 && p.quiet_fraction <= 1.0)) {
    throw InvalidArgument("quiet_fraction must be in (0, 1]");
  }
  if (!(p.threshold_factor > 0.0)) throw InvalidArgument("threshold_factor must be > 0");
  if (!(p.attenuation >= 0.0 && p.attenuation <= 1.0)) {
    throw InvalidArgument("attenuation must be in [0, 1]");
  }
}

}  // namespace

std::vector<double> estimate_noise_profile(const AudioClip& clip, const GateParams& params) {
  clip.validate();
  check_gate_params(params);
  const std::size_t n_fft = gate_fft_size(params, clip.sample_rate);
  const std::size_t hop = params.hop > 0 ? params.hop : n_fft / 4;
  if (clip.samples.size() < n_fft) {
    throw InvalidArgument("estimate_noise_profile: clip shorter than one frame");
  }
  return profile_from_frames(stft(clip.samples, n_fft, hop), params.quiet_fraction,
                             params.smooth_bins);
}

AudioClip spectral_gate_denoise(const AudioClip& clip,
                                const std::optional<std::vector<double>>& noise_profile,
                                const GateParams& params) {
  clip.validate();
  check_gate_params(params);
  if (clip.duration_s() < 1.0) {
    throw InvalidArgument(fmt::format("spectral_gate_denoise: clip is {:.3f} s, need >= 1 s",
                                      clip.duration_s()));
  }
  const std::size_t n_fft = gate_fft_size(params, clip.sample_rate);
  const std::size_t hop = params.hop > 0 ? params.hop : n_fft / 4;
  const std::size_t bins = n_fft / 2 + 1;
  std::vector<double> floor =
      noise_profile ? *noise_profile : estimate_noise_profile(clip, params);
  if (floor.size() != bins) {
    throw InvalidArgument(fmt::format("noise profile has {} bins, expected {}", floor.size(), bins));
  }

  const std::size_t n = clip.samples.size();
  const std::size_t pad = n_fft / 2;
  std::size_t total = n + 2 * pad;
  if ((total - n_fft) % hop != 0) total += hop - (total - n_fft) % hop;
  std::vector<double> padded(total, 0.0);
  std::copy(clip.samples.begin(), clip.samples.end(), padded.begin() + static_cast<std::ptrdiff_t>(pad));

  Stft s = stft(padded, n_fft, hop);
  for (auto& frame : s.frames) {
    for (std::size_t k = 0; k < bins; ++k) {
      if (!(std::norm(frame[k]) > params.threshold_factor * floor[k])) {
        frame[k] *= params.attenuation;
      }
    }
  }
  const std::vector<double> y = istft(s, total);
  AudioClip out = clip;
  std::copy_n(y.begin() + static_cast<std::ptrdiff_t>(pad), n, out.samples.begin());
  return out;
}

namespace {

struct Item {
  std::string pair_id;
  double snr_db = 0.0;
  fs::path noisy_path;
  std::optional<fs::path> clean_path;
  const AudioClip* clean = nullptr;
  const AudioClip* noisy = nullptr;
};

struct ItemEnvelopes {
  bool ok = false;
  std::string reason;
  std::vector<double> clean, noisy, denoised;
};

std::optional<double> condition_of(double snr, const EvalOptions& opt) {
  if (opt.snr_grid.empty()) return std::round(snr * 100.0) / 100.0;
  for (double g : opt.snr_grid) {
    if (std::abs(snr - g) <= opt.snr_tolerance_db) return g;
  }
  return std::nullopt;
}

RocCurve tagged(RocCurve c, std::string condition, double snr) {
  c.condition = std::move(condition);
  c.snr_db = snr;
  return c;
}

EvalResult run_evaluation(const std::vector<Item>& items, Denoiser& denoiser,
                          const EvalOptions& options, Diagnostics* diag) {
  EvalResult result;
  result.denoiser_id = denoiser.id();
  std::vector<ItemEnvelopes> env(items.size());
  std::vector<Diagnostics> local(items.size());

  parallel_for(items.size(), options.workers, [&](std::size_t i) {
    const Item& it = items[i];
    auto& e = env[i];
    try {
      AudioClip clean_owned, noisy_owned;
      const AudioClip* clean = it.clean;
      const AudioClip* noisy = it.noisy;
      if (!clean) {
        clean_owned = read_wav(*it.clean_path);
        clean = &clean_owned;
      }
      if (!noisy) {
        noisy_owned = read_wav(it.noisy_path);
        noisy = &noisy_owned;
      }
      if (clean->samples.size() != noisy->samples.size() ||
          clean->sample_rate != noisy->sample_rate) {
        e.reason = "clean and noisy recordings differ in length or rate";
        return;
      }
      const AudioClip den = denoiser.denoise(it.noisy_path, *noisy);
      if (den.samples.size() != noisy->samples.size() || den.sample_rate != noisy->sample_rate) {
        e.reason = fmt::format("denoiser output has {} samples at {} Hz, expected {} at {} Hz",
                               den.samples.size(), den.sample_rate, noisy->samples.size(),
                               noisy->sample_rate);
        return;
      }
      e.clean = evaluation_envelope(*clean, &local[i]).values;
      e.noisy = evaluation_envelope(*noisy, &local[i]).values;
      e.denoised = evaluation_envelope(den, &local[i]).values;
      e.ok = true;
    } catch (const std::exception& ex) {
      e.reason = ex.what();
    }
  });

  std::map<double, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (const auto& w : local[i].warnings()) warn(diag, fmt::format("{}: {}", items[i].pair_id, w));
    if (!env[i].ok) {
      result.excluded.push_back(fmt::format("{}: {}", items[i].pair_id, env[i].reason));
      warn(diag, fmt::format("pair {} excluded: {}", items[i].pair_id, env[i].reason));
      continue;
    }
    const auto cond = condition_of(items[i].snr_db, options);
    if (!cond) {
      result.excluded.push_back(fmt::format("{}: SNR {:.2f} dB matches no grid value",
                                            items[i].pair_id, items[i].snr_db));
      continue;
    }
    groups[*cond].push_back(i);
  }

  for (const auto& [snr, members] : groups) {
    ConditionResult cr;
    cr.snr_db = snr;
    cr.pairs_used = members.size();
    std::vector<double> clean, noisy, den;
    for (std::size_t i : members) {
      clean.insert(clean.end(), env[i].clean.begin(), env[i].clean.end());
      noisy.insert(noisy.end(), env[i].noisy.begin(), env[i].noisy.end());
      den.insert(den.end(), env[i].denoised.begin(), env[i].denoised.end());
      if (options.per_clip) {
        const auto mask = label_signal_events(Envelope{env[i].clean, kEvalEnvelopeRate});
        cr.clips.push_back({items[i].pair_id,
                            tagged(roc(env[i].noisy, mask), "noisy/" + items[i].pair_id, snr),
                            tagged(roc(env[i].denoised, mask), "denoised/" + items[i].pair_id, snr)});
      }
    }
    const auto mask = label_signal_events(Envelope{clean, kEvalEnvelopeRate});
    cr.noisy = tagged(roc(noisy, mask), "noisy", snr);
    cr.denoised = tagged(roc(den, mask), "denoised", snr);
    if (!cr.noisy.auc) warn(diag, fmt::format("SNR {} dB: rates undefined, AUC omitted", snr));
    result.conditions.push_back(std::move(cr));
  }
  return result;
}

}  // namespace

EvalResult evaluate_denoiser(const std::vector<PairManifest>& pairs, Denoiser& denoiser,
                             const EvalOptions& options, Diagnostics* diag) {
  std::vector<Item> items;
  std::vector<fs::path> noisy_paths;
  for (const auto& m : pairs) {
    Item it;
    it.pair_id = m.pair_id;
    it.snr_db = m.snr_db;
    it.noisy_path = m.noisy_path;
    it.clean_path = fs::path(m.clean_path);
    items.push_back(it);
    noisy_paths.push_back(it.noisy_path);
  }
  denoiser.prepare(noisy_paths);
  return run_evaluation(items, denoiser, options, diag);
}

EvalResult evaluate_clips(const std::vector<EvalClip>& clips, Denoiser& denoiser,
                          const EvalOptions& options, Diagnostics* diag) {
  std::vector<Item> items;
  for (const auto& c : clips) {
    Item it;
    it.pair_id = c.pair_id;
    it.snr_db = c.snr_db;
    it.noisy_path = c.pair_id + ".wav";
    it.clean = &c.clean;
    it.noisy = &c.noisy;
    items.push_back(it);
  }
  return run_evaluation(items, denoiser, options, diag);
}

namespace {

std::string opt_field(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::vector<const RocCurve*> curves_of(const EvalResult& r) {
  std::vector<const RocCurve*> out;
  for (const auto& c : r.conditions) {
    out.push_back(&c.noisy);
    out.push_back(&c.denoised);
  }
  for (const auto& c : r.conditions) {
    for (const auto& clip : c.clips) {
      out.push_back(&clip.noisy);
      out.push_back(&clip.denoised);
    }
  }
  return out;
}

}  // namespace

std::string roc_csv_text(const EvalResult& result) {
  CsvTable t;
  t.header = {"condition", "snr_db", "threshold", "tpr", "fpr"};
  for (const RocCurve* c : curves_of(result)) {
    for (const auto& p : c->points) {
      t.rows.push_back({c->condition, opt_field(c->snr_db), format_double(p.threshold),
                        opt_field(p.tpr), opt_field(p.fpr)});
    }
  }
  return to_csv(t);
}

std::string summary_csv_text(const EvalResult& result) {
  CsvTable t;
  t.header = {"condition", "snr_db", "auc"};
  for (const RocCurve* c : curves_of(result)) {
    t.rows.push_back({c->condition, opt_field(c->snr_db), opt_field(c->auc)});
  }
  return to_csv(t);
}

void write_eval_csvs(const fs::path& roc_path, const fs::path& summary_path,
                     const EvalResult& result) {
  write_file_atomic(roc_path, roc_csv_text(result));
  write_file_atomic(summary_path, summary_csv_text(result));
}

std::vector<RocCurve> read_roc_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  t.require_columns({"condition", "snr_db", "threshold", "tpr", "fpr"});
  const auto c_cond = t.column("condition"), c_snr = t.column("snr_db"),
             c_thr = t.column("threshold"), c_tpr = t.column("tpr"), c_fpr = t.column("fpr");
  auto opt = [](const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    return parse_double(s);
  };
  std::vector<RocCurve> out;
  for (const auto& row : t.rows) {
    const auto snr = opt(row[c_snr]);
    if (out.empty() || out.back().condition != row[c_cond] || out.back().snr_db != snr) {
      RocCurve c;
      c.condition = row[c_cond];
      c.snr_db = snr;
      out.push_back(std::move(c));
    }
    RocPoint p;
    p.threshold = parse_double(row[c_thr]);
    if (!std::isfinite(p.threshold)) {
      throw InputError(fmt::format("{}: non-numeric threshold '{}'", path.string(), row[c_thr]));
    }
    p.tpr = opt(row[c_tpr]);
    p.fpr = opt(row[c_fpr]);
    out.back().points.push_back(p);
  }
  for (auto& c : out) {
    if (std::all_of(c.points.begin(), c.points.end(), [](const RocPoint& p) { return p.tpr && p.fpr; })) {
      c.auc = auc_of(c.points);
    }
  }
  return out;
}

}  // namespace reef
