#include "reef/synth.hpp"

#include "reef/csv.hpp"
#include "reef/dsp.hpp"
#include "reef/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <set>

namespace reef {

namespace fs = std::filesystem;

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::train;
  if (text == "validation" || text == "val") return Split::validation;
  if (text == "test") return Split::test;
  throw InputError(fmt::format("unknown split '{}'", text));
}

std::string to_string(BankRole role) { return role == BankRole::signal ? "signal" : "noise"; }

void SoundBank::validate() const {
  if (entries.empty()) {
    throw InvalidArgument(fmt::format("{} bank for split {} is empty", to_string(role),
                                      to_string(split)));
  }
  for (const auto& e : entries) {
    if (e.split != split) {
      throw InvalidArgument(fmt::format("bank entry {} is labelled {} but the bank is {}",
                                        e.ref(), to_string(e.split), to_string(split)));
    }
    if (!(e.duration_s > 0.0)) {
      throw InvalidArgument(fmt::format("bank entry {} has non-positive duration", e.ref()));
    }
  }
}

std::vector<BankEntry> read_bank_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  t.require_columns({"path", "source", "split"});
  const auto c_path = t.column("path"), c_src = t.column("source"), c_split = t.column("split");
  const bool has_dur = t.has_column("duration_s");
  std::vector<BankEntry> out;
  for (const auto& row : t.rows) {
    BankEntry e;
    e.path = row[c_path];
    if (e.path.is_relative()) e.path = path.parent_path() / e.path;
    e.path = e.path.lexically_normal();
    e.source = row[c_src];
    e.split = parse_split(row[c_split]);
    if (has_dur && !row[t.column("duration_s")].empty()) {
      e.duration_s = parse_double(row[t.column("duration_s")]);
    } else if (std::filesystem::exists(e.path)) {
      const WavInfo info = read_wav_info(e.path);
      e.duration_s = static_cast<double>(info.frames) / info.sample_rate;
    }
    out.push_back(std::move(e));
  }
  check_bank_hygiene(out);
  return out;
}

void check_bank_hygiene(const std::vector<BankEntry>& entries) {
  std::map<std::string, Split> seen;
  for (const auto& e : entries) {
    auto [it, inserted] = seen.emplace(e.ref(), e.split);
    if (!inserted && it->second != e.split) {
      throw InvalidArgument(fmt::format("bank entry {} appears in both {} and {}", e.ref(),
                                        to_string(it->second), to_string(e.split)));
    }
  }
}

SoundBank select_split(const std::vector<BankEntry>& entries, BankRole role, Split split) {
  SoundBank bank;
  bank.role = role;
  bank.split = split;
  for (const auto& e : entries) {
    if (e.split == split) bank.entries.push_back(e);
  }
  return bank;
}

std::vector<BankEntry> partition_entries(std::vector<BankEntry> entries,
                                         const std::array<std::size_t, 3>& counts,
                                         std::uint64_t seed) {
  const std::size_t wanted = counts[0] + counts[1] + counts[2];
  if (wanted > entries.size()) {
    throw InvalidArgument(fmt::format("partition asks for {} entries, bank has {}", wanted,
                                      entries.size()));
  }
  Rng rng(seed);
  for (std::size_t i = entries.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
    std::swap(entries[i - 1], entries[j]);
  }
  entries.resize(wanted);
  for (std::size_t i = 0; i < wanted; ++i) {
    entries[i].split = i < counts[0] ? Split::train
                       : i < counts[0] + counts[1] ? Split::validation
                                                   : Split::test;
  }
  return entries;
}

std::string AugmentPlan::describe() const {
  std::vector<std::string> parts;
  if (pitch_semitones) parts.push_back(fmt::format("pitch:{:+.4f}", *pitch_semitones));
  if (stretch_rate) parts.push_back(fmt::format("stretch:{:.4f}", *stretch_rate));
  if (tanh_drive) parts.push_back(fmt::format("tanh:{:.4f}", *tanh_drive));
  if (parts.empty()) return "none";
  return fmt::format("{}", fmt::join(parts, "|"));
}

AugmentPlan draw_augmentation(Rng& rng, const AugmentParams& params) {
  AugmentPlan plan;
  // every draw is consumed whether or not the augmentation fires, so the
  // stream position never depends on earlier outcomes
  const bool pitch = rng.bernoulli(params.probability);
  const double semis = rng.uniform(-params.max_semitones, params.max_semitones);
  const bool stretch = rng.bernoulli(params.probability);
  const double rate = rng.uniform(params.stretch_min, params.stretch_max);
  const bool distort = rng.bernoulli(params.probability);
  const double drive = rng.uniform(params.drive_min, params.drive_max);
  if (pitch) plan.pitch_semitones = semis;
  if (stretch) plan.stretch_rate = rate;
  if (distort) plan.tanh_drive = drive;
  return plan;
}

AudioClip apply_augmentation(const AudioClip& clip, const AugmentPlan& plan) {
  clip.validate();
  AudioClip out = clip;
  const std::size_t n = clip.samples.size();
  if (plan.pitch_semitones && *plan.pitch_semitones != 0.0) {
    out.samples = pitch_shift(out.samples, *plan.pitch_semitones);
  }
  if (plan.stretch_rate && *plan.stretch_rate != 1.0) {
    out.samples = time_stretch(out.samples, *plan.stretch_rate);
  }
  out.samples.resize(n, 0.0);
  if (plan.tanh_drive) {
    const double d = *plan.tanh_drive;
    if (!(d > 0.0)) throw InvalidArgument("tanh drive must be > 0");
    const double norm = std::tanh(d);
    for (double& v : out.samples) v = std::tanh(d * v) / norm;
  }
  return out;
}

Augmented augment(const AudioClip& clip, Rng& rng, const AugmentParams& params) {
  AugmentPlan plan = draw_augmentation(rng, params);
  return {apply_augmentation(clip, plan), plan};
}

void MixRecipe::validate() const {
  if (n_signals_min < 1 || n_signals_max > 5 || n_signals_min > n_signals_max) {
    throw InvalidArgument(fmt::format("n_signals range [{}, {}] must lie within [1, 5]",
                                      n_signals_min, n_signals_max));
  }
  if (!(segment_len_s > 0.0)) throw InvalidArgument("segment_len_s must be > 0");
  if (!(augment.probability >= 0.0 && augment.probability <= 1.0)) {
    throw InvalidArgument("augmentation probability must be in [0, 1]");
  }
  if (!(peak_limit > 0.0)) throw InvalidArgument("peak_limit must be > 0");
  if (sample_rate < 0.0) throw InvalidArgument("sample_rate must be >= 0");
}

namespace {

AudioClip load_entry(const BankEntry& e, double target_rate) {
  AudioClip clip = e.audio ? *e.audio : read_wav(e.path);
  clip.calibration.reset();
  if (target_rate > 0.0 && clip.sample_rate != target_rate) {
    clip.samples = resample(clip.samples, target_rate / clip.sample_rate);
    clip.sample_rate = target_rate;
  }
  clip.validate();
  return clip;
}

double power_db_ratio(double p_num, double p_den) {
  if (p_den <= 0.0) return std::numeric_limits<double>::infinity();
  if (p_num <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(p_num / p_den);
}

}  // namespace

MixedPair make_pair(const SoundBank& signals, const SoundBank& noise, const MixRecipe& recipe,
                    Rng& rng) {
  recipe.validate();
  signals.validate();
  noise.validate();
  if (signals.role != BankRole::signal || noise.role != BankRole::noise) {
    throw InvalidArgument("make_pair: bank roles are swapped");
  }
  if (signals.split != noise.split) {
    throw InvalidArgument(fmt::format("make_pair: signal bank is {} but noise bank is {}",
                                      to_string(signals.split), to_string(noise.split)));
  }

  const int n_signals = static_cast<int>(rng.uniform_int(recipe.n_signals_min, recipe.n_signals_max));
  std::vector<std::size_t> picks;
  if (signals.entries.size() >= static_cast<std::size_t>(n_signals)) {
    std::vector<std::size_t> order(signals.entries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (int i = 0; i < n_signals; ++i) {
      const auto j = static_cast<std::size_t>(
          rng.uniform_int(i, static_cast<std::int64_t>(order.size()) - 1));
      std::swap(order[static_cast<std::size_t>(i)], order[j]);
      picks.push_back(order[static_cast<std::size_t>(i)]);
    }
  } else {
    for (int i = 0; i < n_signals; ++i) {
      picks.push_back(static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(signals.entries.size()) - 1)));
    }
  }

  double rate = recipe.sample_rate;
  std::vector<AudioClip> parts;
  for (std::size_t idx : picks) {
    parts.push_back(load_entry(signals.entries[idx], rate));
    if (rate == 0.0) rate = parts.back().sample_rate;
  }
  const auto len = static_cast<std::size_t>(std::llround(recipe.segment_len_s * rate));
  if (len == 0) throw InvalidArgument("make_pair: segment shorter than one sample");

  AudioClip clean;
  clean.sample_rate = rate;
  clean.samples.assign(len, 0.0);
  MixedPair pair;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& s = parts[p].samples;
    const std::size_t span = std::min(s.size(), len);
    const auto offset =
        static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(len - span)));
    for (std::size_t i = 0; i < span; ++i) clean.samples[offset + i] += s[i];
    pair.manifest.signal_refs.push_back(signals.entries[picks[p]].ref());
  }

  const AugmentPlan plan = draw_augmentation(rng, recipe.augment);
  clean = apply_augmentation(clean, plan);

  const auto noise_idx = static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(noise.entries.size()) - 1));
  const BankEntry& noise_entry = noise.entries[noise_idx];
  const AudioClip noise_src = load_entry(noise_entry, rate);
  AudioClip nz;
  nz.sample_rate = rate;
  nz.samples.resize(len);
  if (noise_src.samples.size() >= len) {
    const auto offset = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(noise_src.samples.size() - len)));
    std::copy_n(noise_src.samples.begin() + static_cast<std::ptrdiff_t>(offset), len,
                nz.samples.begin());
  } else if (recipe.loop_short_noise) {
    const auto offset = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(noise_src.samples.size()) - 1));
    for (std::size_t i = 0; i < len; ++i) {
      nz.samples[i] = noise_src.samples[(offset + i) % noise_src.samples.size()];
    }
  } else {
    throw InputError(fmt::format(
        "noise entry {} is {:.3f} s long, shorter than the {:.3f} s segment (looping disabled)",
        noise_entry.ref(), noise_src.duration_s(), recipe.segment_len_s));
  }

  const double p_clean = mean_square(clean.samples);
  if (recipe.snr_db) {
    const double p_noise = mean_square(nz.samples);
    if (!(p_noise > 0.0)) {
      throw InputError(fmt::format("noise entry {} is silent; cannot reach a target SNR",
                                   noise_entry.ref()));
    }
    if (!(p_clean > 0.0)) throw InputError("signal vector is silent; cannot reach a target SNR");
    const double g = std::sqrt(p_clean / (p_noise * std::pow(10.0, *recipe.snr_db / 10.0)));
    for (double& v : nz.samples) v *= g;
  }

  AudioClip noisy = clean;
  double peak = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    noisy.samples[i] = clean.samples[i] + nz.samples[i];
    peak = std::max(peak, std::abs(noisy.samples[i]));
  }
  if (peak > recipe.peak_limit) {
    const double g = recipe.peak_limit / peak;
    for (std::size_t i = 0; i < len; ++i) {
      clean.samples[i] *= g;
      nz.samples[i] *= g;
      noisy.samples[i] = clean.samples[i] + nz.samples[i];
    }
  }

  pair.manifest.noise_ref = noise_entry.ref();
  pair.manifest.augments_applied = plan.describe();
  pair.manifest.split = signals.split;
  pair.manifest.snr_db = power_db_ratio(mean_square(clean.samples), mean_square(nz.samples));
  pair.clean = std::move(clean);
  pair.noise = std::move(nz);
  pair.noisy = std::move(noisy);
  return pair;
}

Rng pair_rng(std::uint64_t seed, Split split, std::size_t index) {
  return Rng::derive(seed, static_cast<std::uint64_t>(index) * 4u + static_cast<std::uint64_t>(split));
}

std::string pair_id(Split split, std::size_t index) {
  return fmt::format("{}-{:06d}", to_string(split), index);
}

std::vector<PairManifest> build_dataset(const SoundBank& signals, const SoundBank& noise,
                                        const MixRecipe& recipe, std::size_t count,
                                        const DatasetOptions& options) {
  if (count == 0) throw InvalidArgument("build_dataset: count must be > 0");
  recipe.validate();
  signals.validate();
  noise.validate();
  const Split split = signals.split;
  const std::string split_dir = to_string(split);
  const fs::path manifest_path = options.out_dir / (split_dir + "_manifest.csv");

  std::vector<PairManifest> manifests(count);
  std::vector<std::string> collisions;
  for (std::size_t i = 0; i < count; ++i) {
    auto& m = manifests[i];
    m.pair_id = pair_id(split, i);
    m.split = split;
    m.seed = recipe.seed;
    m.clean_path = fmt::format("{}/clean/{}.wav", split_dir, m.pair_id);
    m.noisy_path = fmt::format("{}/noisy/{}.wav", split_dir, m.pair_id);
    if (!options.overwrite) {
      for (const auto& p : {m.clean_path, m.noisy_path}) {
        if (fs::exists(options.out_dir / p)) collisions.push_back(p);
      }
    }
  }
  if (!options.overwrite && fs::exists(manifest_path)) collisions.push_back(manifest_path.string());
  if (!collisions.empty()) {
    throw InputError(fmt::format("refusing to overwrite {} existing output(s), first: {}",
                                 collisions.size(), collisions.front()));
  }

  parallel_for(count, options.workers, [&](std::size_t i) {
    Rng rng = pair_rng(recipe.seed, split, i);
    MixedPair pair = make_pair(signals, noise, recipe, rng);
    auto& m = manifests[i];
    m.signal_refs = std::move(pair.manifest.signal_refs);
    m.noise_ref = std::move(pair.manifest.noise_ref);
    m.augments_applied = std::move(pair.manifest.augments_applied);
    m.snr_db = pair.manifest.snr_db;
    write_wav(options.out_dir / m.clean_path, pair.clean, SampleFormat::pcm16);
    write_wav(options.out_dir / m.noisy_path, pair.noisy, SampleFormat::pcm16);
  });
  check_manifest_hygiene(manifests);
  write_manifest_csv(manifest_path, manifests);
  return manifests;
}

std::string manifest_csv_text(const std::vector<PairManifest>& pairs) {
  CsvTable t;
  t.header = {"pair_id",    "split",     "clean_path",       "noisy_path", "signal_refs",
              "noise_ref",  "augments_applied", "snr_db", "seed"};
  for (const auto& m : pairs) {
    t.rows.push_back({m.pair_id, to_string(m.split), m.clean_path, m.noisy_path,
                      fmt::format("{}", fmt::join(m.signal_refs, "|")), m.noise_ref,
                      m.augments_applied, format_double(m.snr_db), std::to_string(m.seed)});
  }
  return to_csv(t);
}

void write_manifest_csv(const fs::path& path, const std::vector<PairManifest>& pairs) {
  write_file_atomic(path, manifest_csv_text(pairs));
}

std::vector<PairManifest> read_manifest_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  t.require_columns({"pair_id", "split", "clean_path", "noisy_path", "signal_refs", "noise_ref",
                     "augments_applied", "snr_db", "seed"});
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path q(p);
    return (q.is_relative() ? base / q : q).generic_string();
  };
  std::vector<PairManifest> out;
  for (const auto& row : t.rows) {
    PairManifest m;
    m.pair_id = row[t.column("pair_id")];
    m.split = parse_split(row[t.column("split")]);
    m.clean_path = resolve(row[t.column("clean_path")]);
    m.noisy_path = resolve(row[t.column("noisy_path")]);
    const std::string refs = row[t.column("signal_refs")];
    std::size_t start = 0;
    while (start <= refs.size() && !refs.empty()) {
      const auto bar = refs.find('|', start);
      m.signal_refs.push_back(refs.substr(start, bar == std::string::npos ? bar : bar - start));
      if (bar == std::string::npos) break;
      start = bar + 1;
    }
    m.noise_ref = row[t.column("noise_ref")];
    m.augments_applied = row[t.column("augments_applied")];
    m.snr_db = parse_double(row[t.column("snr_db")]);
    m.seed = std::stoull(row[t.column("seed")]);
    out.push_back(std::move(m));
  }
  return out;
}

void check_manifest_hygiene(const std::vector<PairManifest>& pairs) {
  std::map<std::string, Split> seen;
  auto check = [&](const std::string& ref, Split s) {
    auto [it, inserted] = seen.emplace(ref, s);
    if (!inserted && it->second != s) {
      throw InvalidArgument(fmt::format("bank entry {} is used in both {} and {} pairs", ref,
                                        to_string(it->second), to_string(s)));
    }
  };
  for (const auto& m : pairs) {
    for (const auto& r : m.signal_refs) check(r, m.split);
    check(m.noise_ref, m.split);
  }
}

}  // namespace reef
