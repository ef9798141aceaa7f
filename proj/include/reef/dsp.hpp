#pragma once

#include "reef/audio_io.hpp"
#include "reef/fft.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace reef {

enum class BandName { low, high, custom };

// Analysis band [f_lo, f_hi] in Hz.
struct BandSpec {
  double f_lo = 0.0;
  double f_hi = 0.0;
  BandName name = BandName::custom;

  // Throws InvalidArgument unless 0 < f_lo < f_hi <= sample_rate / 2.
  void validate(double sample_rate) const;
  std::string label() const;

  friend bool operator==(const BandSpec&, const BandSpec&) = default;
};

// 0.1-1 kHz, fish dominated.
BandSpec low_band();
// 1-48 kHz, snapping-shrimp dominated. Some analyses cap this at 20 kHz;
// use high_band(20000.0) for that variant.
BandSpec high_band(double f_hi = 48000.0);

// One second-order section: b0 + b1 z^-1 + b2 z^-2 over 1 + a1 z^-1 + a2 z^-2.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

// Butterworth designs by bilinear transform with pre-warped cutoffs.
// Order must be even.
std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double sample_rate);
std::vector<Biquad> butterworth_highpass(int order, double cutoff_hz, double sample_rate);

// Causal cascade, zero initial state.
std::vector<double> sosfilt(std::span<const Biquad> sos, std::span<const double> x);

// Zero-phase forward-backward cascade with odd-reflection padding and
// steady-state initial conditions at both ends.
std::vector<double> sosfiltfilt(std::span<const Biquad> sos, std::span<const double> x,
                                std::size_t padlen);

// Complex frequency response at f.
fft::cplx sos_response(std::span<const Biquad> sos, double f_hz, double sample_rate);

// Per-edge order of the band filters.
inline constexpr int kBandEdgeOrder = 8;

// Zero-phase band filter: 8th-order Butterworth high-pass at f_lo cascaded
// with an 8th-order low-pass at f_hi, run forward and backward. A band
// whose f_hi sits exactly at Nyquist is treated as open-ended (high-pass
// only). Length and metadata are preserved.
AudioClip bandpass(const AudioClip& clip, const BandSpec& band);

struct Envelope {
  std::vector<double> values;
  double sample_rate = 0.0;
};

// Magnitude of the analytic signal, built from a single full-length FFT.
Envelope hilbert_envelope(const AudioClip& clip);
std::vector<double> analytic_magnitude(std::span<const double> x);

enum class WindowKind { hann, hamming, rectangular };

// Periodic (DFT-even) window of length n.
std::vector<double> make_window(WindowKind kind, std::size_t n);
WindowKind parse_window_kind(const std::string& name);
std::string to_string(WindowKind kind);

struct Spectrogram {
  // [frequency bin x time step], one-sided power scaled so that each
  // column sums to the energy of the windowed frame.
  Eigen::MatrixXd intensities;
  double bin_hz = 0.0;
  double hop_s = 0.0;
  std::size_t window_length = 0;
  std::size_t hop_length = 0;
  double overlap_fraction = 0.0;
  WindowKind window = WindowKind::hann;

  std::size_t bins() const { return static_cast<std::size_t>(intensities.rows()); }
  std::size_t steps() const { return static_cast<std::size_t>(intensities.cols()); }
  double bin_frequency(std::size_t k) const { return static_cast<double>(k) * bin_hz; }
};

// Frame length is round(window_s * rate) rounded to the nearest even
// integer; the hop is round(length * (1 - overlap)).
std::size_t spectrogram_window_length(double window_s, double sample_rate);

Spectrogram spectrogram(const AudioClip& clip, double window_s, double overlap,
                        WindowKind window = WindowKind::hann);

// Complex short-time transform: frames[t][k], k in [0, n_fft/2]. Frames
// start at t * hop; the signal is not padded.
struct Stft {
  std::vector<std::vector<fft::cplx>> frames;
  std::size_t n_fft = 0;
  std::size_t hop = 0;
  WindowKind window = WindowKind::hann;
};

Stft stft(std::span<const double> x, std::size_t n_fft, std::size_t hop,
          WindowKind window = WindowKind::hann);

// Weighted overlap-add inverse of `stft`, producing `length` samples.
// Samples never covered by a frame are zero.
std::vector<double> istft(const Stft& s, std::size_t length);

// Band-limited (windowed-sinc) resampling; output length is
// round(x.size() * ratio). ratio = out_rate / in_rate.
std::vector<double> resample(std::span<const double> x, double ratio);

// Phase-vocoder time scaling. rate > 1 speeds up (shorter output), pitch
// is preserved. Output length is round(x.size() / rate).
std::vector<double> time_stretch(std::span<const double> x, double rate);

// Pitch shift by `semitones`, duration preserved.
std::vector<double> pitch_shift(std::span<const double> x, double semitones);

double mean_square(std::span<const double> x);
double rms(std::span<const double> x);

}  // namespace reef
