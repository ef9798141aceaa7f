#pragma once

#include "reef/audio_io.hpp"
#include "reef/rng.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace reef {

enum class BankRole { signal, noise };
enum class Split { train, validation, test };

std::string to_string(Split split);
Split parse_split(const std::string& text);
std::string to_string(BankRole role);

struct BankEntry {
  std::filesystem::path path;  // also the entry's reference in manifests
  std::string source;          // corpus tag, e.g. "FishSounds"
  double duration_s = 0.0;
  Split split = Split::train;
  // In-memory audio; when null the entry is loaded from `path`.
  std::shared_ptr<const AudioClip> audio;

  std::string ref() const { return path.generic_string(); }
};

// Entries of one role restricted to one split.
struct SoundBank {
  BankRole role = BankRole::signal;
  Split split = Split::train;
  std::vector<BankEntry> entries;

  // Throws InvalidArgument on an empty bank, a non-positive duration or an
  // entry labelled with a different split.
  void validate() const;
};

// Bank CSV columns: path, source, split, and optionally duration_s (read
// from the WAV header when absent). Relative paths resolve against the
// CSV's directory. A missing file keeps duration 0 so callers can list
// every missing entry at once.
std::vector<BankEntry> read_bank_csv(const std::filesystem::path& path);

// Throws InvalidArgument when one path is labelled with more than one split.
void check_bank_hygiene(const std::vector<BankEntry>& entries);

SoundBank select_split(const std::vector<BankEntry>& entries, BankRole role, Split split);

// Shuffles with `seed` and labels the first counts[0] entries train, the
// next counts[1] validation and the next counts[2] test; any remainder is
// dropped.
std::vector<BankEntry> partition_entries(std::vector<BankEntry> entries,
                                         const std::array<std::size_t, 3>& counts,
                                         std::uint64_t seed);

struct AugmentParams {
  double probability = 0.5;
  double max_semitones = 2.0;
  double stretch_min = 0.9;
  double stretch_max = 1.1;
  double drive_min = 1.0;
  double drive_max = 4.0;
};

// Which augmentations to apply, and with what parameters.
struct AugmentPlan {
  std::optional<double> pitch_semitones;
  std::optional<double> stretch_rate;
  std::optional<double> tanh_drive;

  bool any() const { return pitch_semitones || stretch_rate || tanh_drive; }
  // e.g. "pitch:+1.23|stretch:0.95|tanh:2.10", or "none"
  std::string describe() const;
};

// Each augmentation switched on independently with params.probability.
AugmentPlan draw_augmentation(Rng& rng, const AugmentParams& params = {});

// Pitch shift, then time stretch, then tanh(drive x) / tanh(drive). The
// output always has the input's length.
AudioClip apply_augmentation(const AudioClip& clip, const AugmentPlan& plan);

struct Augmented {
  AudioClip clip;
  AugmentPlan plan;
};
Augmented augment(const AudioClip& clip, Rng& rng, const AugmentParams& params = {});

struct MixRecipe {
  int n_signals_min = 1;
  int n_signals_max = 5;
  AugmentParams augment;
  double segment_len_s = 10.0;
  // Clean-to-noise power ratio over the whole segment; native noise level
  // when unset.
  std::optional<double> snr_db;
  std::uint64_t seed = 0;
  // Noise entries shorter than the segment are looped instead of rejected.
  bool loop_short_noise = false;
  // Output rate; 0 takes the rate of the first signal entry used.
  double sample_rate = 0.0;
  // Pairs whose noisy peak exceeds this are scaled down as a whole.
  double peak_limit = 0.99;

  void validate() const;
};

struct PairManifest {
  std::string pair_id;
  Split split = Split::train;
  std::string clean_path;
  std::string noisy_path;
  std::vector<std::string> signal_refs;
  std::string noise_ref;
  std::string augments_applied;
  double snr_db = 0.0;  // realized
  std::uint64_t seed = 0;
};

struct MixedPair {
  AudioClip clean;
  AudioClip noise;
  AudioClip noisy;
  PairManifest manifest;
};

// One noisy/clean pair. N signals are superimposed at uniform random
// offsets within the segment (cut at the segment end), the augmentation is
// applied to that signal vector, and a noise vector of the same length is
// cut from one random noise entry. noisy = clean + noise sample for sample.
MixedPair make_pair(const SoundBank& signals, const SoundBank& noise, const MixRecipe& recipe,
                    Rng& rng);

// Generator for pair `index` of a dataset built with `seed` for `split`.
Rng pair_rng(std::uint64_t seed, Split split, std::size_t index);

std::string pair_id(Split split, std::size_t index);

struct DatasetOptions {
  std::filesystem::path out_dir;
  unsigned workers = 1;
  bool overwrite = false;
};

// Writes `count` pairs as <out_dir>/<split>/{clean,noisy}/<pair_id>.wav
// (16-bit) plus <out_dir>/<split>_manifest.csv. Refuses to overwrite
// existing outputs unless options.overwrite is set.
std::vector<PairManifest> build_dataset(const SoundBank& signals, const SoundBank& noise,
                                        const MixRecipe& recipe, std::size_t count,
                                        const DatasetOptions& options);

// Manifest CSV: pair_id, split, clean_path, noisy_path, signal_refs
// (|-separated), noise_ref, augments_applied, snr_db, seed.
std::string manifest_csv_text(const std::vector<PairManifest>& pairs);
void write_manifest_csv(const std::filesystem::path& path, const std::vector<PairManifest>& pairs);
std::vector<PairManifest> read_manifest_csv(const std::filesystem::path& path);

// Throws InvalidArgument if any bank reference appears under more than one
// split across the given manifests.
void check_manifest_hygiene(const std::vector<PairManifest>& pairs);

}  // namespace reef
