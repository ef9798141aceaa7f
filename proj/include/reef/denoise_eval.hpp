#pragma once

#include "reef/audio_io.hpp"
#include "reef/common.hpp"
#include "reef/dsp.hpp"
#include "reef/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace reef {

// (v - min) / (max - min). A constant envelope maps to zeros and warns.
Envelope normalize_envelope(const Envelope& env, Diagnostics* diag = nullptr);

// Sample-level signal-event mask of a normalized clean envelope.
inline constexpr double kEventLevel = 0.01;
std::vector<bool> label_signal_events(const Envelope& clean_norm, double level = kEventLevel);

struct RocPoint {
  double threshold = 0.0;
  std::optional<double> tpr;  // empty when the mask has no events
  std::optional<double> fpr;  // empty when the mask has no non-events
};

struct RocCurve {
  std::vector<RocPoint> points;  // threshold descending
  std::optional<double> auc;
  std::string condition;
  std::optional<double> snr_db;
  std::size_t samples = 0;
};

// 512 evenly spaced values in [0, 1], plus every distinct test value when
// there are at most 1e6 of them; unique and sorted descending.
std::vector<double> default_thresholds(std::span<const double> test_values);

// Threshold sweep. At each threshold a sample counts as detected when its
// test value is strictly above it. AUC integrates TPR over FPR by the
// trapezoid rule from (0, 0), then closes the curve along TPR = last TPR to
// FPR = 1 and up to (1, 1); a test signal that never fires therefore scores
// 0. AUC is empty when either rate is undefined.
RocCurve roc(std::span<const double> test_norm, const std::vector<bool>& mask,
             std::span<const double> thresholds);
RocCurve roc(std::span<const double> test_norm, const std::vector<bool>& mask);

double auc_of(const std::vector<RocPoint>& points);

// Rate at which envelopes are compared.
inline constexpr double kEvalEnvelopeRate = 1000.0;

// Hilbert envelope averaged over blocks of round(rate / 1 kHz) samples
// (a trailing partial block is dropped), then normalized.
Envelope evaluation_envelope(const AudioClip& clip, Diagnostics* diag = nullptr);

// Maps noisy recordings to denoised estimates of the same length.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual std::string id() const = 0;
  // Called once with every noisy file before any denoise() call.
  virtual void prepare(const std::vector<std::filesystem::path>& /*noisy_paths*/) {}
  virtual AudioClip denoise(const std::filesystem::path& noisy_path, const AudioClip& noisy) = 0;
};

class FunctionDenoiser : public Denoiser {
 public:
  using Fn = std::function<AudioClip(const AudioClip&)>;
  FunctionDenoiser(std::string id, Fn fn) : id_(std::move(id)), fn_(std::move(fn)) {}
  std::string id() const override { return id_; }
  AudioClip denoise(const std::filesystem::path&, const AudioClip& noisy) override {
    return fn_(noisy);
  }

 private:
  std::string id_;
  Fn fn_;
};

// Reads <dir>/<basename of the noisy file>.
class DirectoryDenoiser : public Denoiser {
 public:
  explicit DirectoryDenoiser(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::string id() const override { return "dir:" + dir_.filename().string(); }
  AudioClip denoise(const std::filesystem::path& noisy_path, const AudioClip& noisy) override;

 private:
  std::filesystem::path dir_;
};

// Runs `<program> <noisy_dir> <out_dir>` once per directory holding noisy
// files, then reads outputs by basename from out_dir. Outputs go to a
// scratch directory under `work_dir`.
class ExecutableDenoiser : public Denoiser {
 public:
  ExecutableDenoiser(std::filesystem::path program, std::filesystem::path work_dir)
      : program_(std::move(program)), work_dir_(std::move(work_dir)) {}
  std::string id() const override { return "exe:" + program_.filename().string(); }
  void prepare(const std::vector<std::filesystem::path>& noisy_paths) override;
  AudioClip denoise(const std::filesystem::path& noisy_path, const AudioClip& noisy) override;

 private:
  std::filesystem::path program_;
  std::filesystem::path work_dir_;
  std::map<std::filesystem::path, std::filesystem::path> out_dirs_;
};

struct GateParams {
  std::size_t n_fft = 0;  // 0: next power of two above 20 ms
  std::size_t hop = 0;    // 0: n_fft / 4
  double quiet_fraction = 0.1;
  // Bins pass when their power exceeds threshold_factor times the floor.
  double threshold_factor = 6.0;
  // Half-width, in bins, of the median filter applied to the floor so that
  // a persistent narrow line is not mistaken for noise.
  std::size_t smooth_bins = 8;
  double attenuation = 0.0;  // gain applied to gated bins
};

std::size_t gate_fft_size(const GateParams& params, double sample_rate);

// Per-bin noise power: mean over the quietest frames, median-smoothed
// across frequency.
std::vector<double> estimate_noise_profile(const AudioClip& clip, const GateParams& params = {});

// Reference denoiser: STFT gating against the noise profile, overlap-add
// reconstruction with centred frames. Length and metadata are preserved.
AudioClip spectral_gate_denoise(const AudioClip& clip,
                                const std::optional<std::vector<double>>& noise_profile = {},
                                const GateParams& params = {});

enum class PoolMode { pooled, per_clip };

struct EvalOptions {
  // SNR conditions; a pair belongs to the first grid value within
  // snr_tolerance_db of its realized SNR. Empty: one condition per distinct
  // realized SNR rounded to 0.01 dB.
  std::vector<double> snr_grid;
  double snr_tolerance_db = 0.05;
  bool per_clip = false;
  unsigned workers = 1;
};

struct ClipCurves {
  std::string pair_id;
  RocCurve noisy;
  RocCurve denoised;
};

struct ConditionResult {
  double snr_db = 0.0;
  RocCurve noisy;     // pooled over the condition's pairs
  RocCurve denoised;
  std::vector<ClipCurves> clips;  // filled when per_clip is set
  std::size_t pairs_used = 0;
};

struct EvalResult {
  std::string denoiser_id;
  std::vector<ConditionResult> conditions;  // ascending SNR
  std::vector<std::string> excluded;        // pair ids left out, with reasons
};

// Pairs must carry resolved clean_path and noisy_path.
EvalResult evaluate_denoiser(const std::vector<PairManifest>& pairs, Denoiser& denoiser,
                             const EvalOptions& options = {}, Diagnostics* diag = nullptr);

// Same protocol on in-memory clips; used by the tests and by callers that
// already hold audio.
struct EvalClip {
  std::string pair_id;
  double snr_db = 0.0;
  AudioClip clean;
  AudioClip noisy;
};
EvalResult evaluate_clips(const std::vector<EvalClip>& clips, Denoiser& denoiser,
                          const EvalOptions& options = {}, Diagnostics* diag = nullptr);

// ROC CSV: condition, snr_db, threshold, tpr, fpr. Summary CSV: condition,
// snr_db, auc. Undefined rates are written as empty fields.
std::string roc_csv_text(const EvalResult& result);
std::string summary_csv_text(const EvalResult& result);
void write_eval_csvs(const std::filesystem::path& roc_path,
                     const std::filesystem::path& summary_path, const EvalResult& result);

// Reads a ROC CSV back into curves keyed by (condition, snr_db) in file order.
std::vector<RocCurve> read_roc_csv(const std::filesystem::path& path);

}  // namespace reef
