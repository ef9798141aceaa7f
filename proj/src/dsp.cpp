#include "reef/dsp.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace reef {

using fft::cplx;
using std::numbers::pi;

void BandSpec::validate(double sample_rate) const {
  const double nyquist = sample_rate / 2.0;
  if (!(f_lo > 0.0) || !(f_lo < f_hi) || !(f_hi <= nyquist)) {
    throw InvalidArgument(fmt::format(
        "band {}-{} Hz is invalid for sample rate {} Hz (need 0 < f_lo < f_hi <= {})", f_lo,
        f_hi, sample_rate, nyquist));
  }
}

std::string BandSpec::label() const {
  switch (name) {
    case BandName::low: return "low";
    case BandName::high: return "high";
    case BandName::custom: break;
  }
  return fmt::format("{}-{}Hz", f_lo, f_hi);
}

BandSpec low_band() { return {100.0, 1000.0, BandName::low}; }
BandSpec high_band(double f_hi) { return {1000.0, f_hi, BandName::high}; }

namespace {

std::vector<cplx> butterworth_prototype_upper_poles(int order) {
  if (order < 2 || order % 2 != 0) {
    throw InvalidArgument(fmt::format("Butterworth order must be even and >= 2, got {}", order));
  }
  std::vector<cplx> poles;
  for (int k = 0; k < order / 2; ++k) {
    const double theta = pi * (2.0 * k + 1.0) / (2.0 * order);
    poles.emplace_back(-std::sin(theta), std::cos(theta));
  }
  return poles;
}

double prewarp(double cutoff_hz, double sample_rate) {
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < sample_rate / 2.0)) {
    throw InvalidArgument(fmt::format("cutoff {} Hz must lie strictly inside (0, {})", cutoff_hz,
                                      sample_rate / 2.0));
  }
  return 2.0 * sample_rate * std::tan(pi * cutoff_hz / sample_rate);
}

cplx bilinear(cplx s, double sample_rate) {
  const double k = 2.0 * sample_rate;
  return (k + s) / (k - s);
}

void steady_state(std::span<const Biquad> sos, double v, std::vector<double>& s1,
                  std::vector<double>& s2) {
  for (std::size_t i = 0; i < sos.size(); ++i) {
    const Biquad& q = sos[i];
    const double gain = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    const double y = gain * v;
    s2[i] = q.b2 * v - q.a2 * y;
    s1[i] = q.b1 * v - q.a1 * y + s2[i];
    v = y;
  }
}

void run_cascade(std::span<const Biquad> sos, std::vector<double>& x, std::vector<double>& s1,
                 std::vector<double>& s2) {
  for (std::size_t i = 0; i < sos.size(); ++i) {
    const Biquad q = sos[i];
    double z1 = s1[i], z2 = s2[i];
    for (double& v : x) {
      const double in = v;
      const double y = q.b0 * in + z1;
      z1 = q.b1 * in - q.a1 * y + z2;
      z2 = q.b2 * in - q.a2 * y;
      v = y;
    }
    s1[i] = z1;
    s2[i] = z2;
  }
}

}  // namespace

std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double sample_rate) {
  const double wc = prewarp(cutoff_hz, sample_rate);
  std::vector<Biquad> sos;
  for (const cplx& p : butterworth_prototype_upper_poles(order)) {
    const cplx z = bilinear(wc * p, sample_rate);
    const double a1 = -2.0 * z.real();
    const double a2 = std::norm(z);
    const double g = (1.0 + a1 + a2) / 4.0;
    sos.push_back({g, 2.0 * g, g, a1, a2});
  }
  return sos;
}

std::vector<Biquad> butterworth_highpass(int order, double cutoff_hz, double sample_rate) {
  const double wc = prewarp(cutoff_hz, sample_rate);
  std::vector<Biquad> sos;
  for (const cplx& p : butterworth_prototype_upper_poles(order)) {
    const cplx z = bilinear(wc / p, sample_rate);
    const double a1 = -2.0 * z.real();
    const double a2 = std::norm(z);
    const double g = (1.0 - a1 + a2) / 4.0;
    sos.push_back({g, -2.0 * g, g, a1, a2});
  }
  return sos;
}

std::vector<double> sosfilt(std::span<const Biquad> sos, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  std::vector<double> s1(sos.size(), 0.0), s2(sos.size(), 0.0);
  run_cascade(sos, y, s1, s2);
  return y;
}

std::vector<double> sosfiltfilt(std::span<const Biquad> sos, std::span<const double> x,
                                std::size_t padlen) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  padlen = std::min(padlen, n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * padlen);
  for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  std::vector<double> s1(sos.size()), s2(sos.size());
  steady_state(sos, ext.front(), s1, s2);
  run_cascade(sos, ext, s1, s2);
  std::reverse(ext.begin(), ext.end());
  steady_state(sos, ext.front(), s1, s2);
  run_cascade(sos, ext, s1, s2);
  std::reverse(ext.begin(), ext.end());

  return {ext.begin() + static_cast<std::ptrdiff_t>(padlen),
          ext.begin() + static_cast<std::ptrdiff_t>(padlen + n)};
}

cplx sos_response(std::span<const Biquad> sos, double f_hz, double sample_rate) {
  const cplx zi = std::polar(1.0, -2.0 * pi * f_hz / sample_rate);  // z^-1
  cplx h = 1.0;
  for (const Biquad& q : sos) {
    h *= (q.b0 + q.b1 * zi + q.b2 * zi * zi) / (1.0 + q.a1 * zi + q.a2 * zi * zi);
  }
  return h;
}

AudioClip bandpass(const AudioClip& clip, const BandSpec& band) {
  clip.validate();
  band.validate(clip.sample_rate);
  std::vector<Biquad> sos = butterworth_highpass(kBandEdgeOrder, band.f_lo, clip.sample_rate);
  if (band.f_hi < clip.sample_rate / 2.0) {
    auto lp = butterworth_lowpass(kBandEdgeOrder, band.f_hi, clip.sample_rate);
    sos.insert(sos.end(), lp.begin(), lp.end());
  }
  // about ten periods of the lower edge, long enough for the slowest pole to settle
  const auto padlen = static_cast<std::size_t>(std::ceil(10.0 * clip.sample_rate / band.f_lo));
  AudioClip out = clip;
  out.samples = sosfiltfilt(sos, clip.samples, padlen);
  return out;
}

std::vector<double> analytic_magnitude(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::vector<cplx> half = fft::forward_real(x);
  std::vector<cplx> full(n, cplx{0.0, 0.0});
  full[0] = half[0];
  const std::size_t positive_end = (n + 1) / 2;  // exclusive
  for (std::size_t k = 1; k < positive_end; ++k) full[k] = 2.0 * half[k];
  if (n % 2 == 0) full[n / 2] = half[n / 2];
  const std::vector<cplx> z = fft::inverse(full);
  std::vector<double> mag(n);
  for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(z[i]);
  return mag;
}

Envelope hilbert_envelope(const AudioClip& clip) {
  clip.validate();
  return {analytic_magnitude(clip.samples), clip.sample_rate};
}

std::vector<double> make_window(WindowKind kind, std::size_t n) {
  std::vector<double> w(n, 1.0);
  const double N = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = std::cos(2.0 * pi * static_cast<double>(i) / N);
    switch (kind) {
      case WindowKind::hann: w[i] = 0.5 - 0.5 * c; break;
      case WindowKind::hamming: w[i] = 0.54 - 0.46 * c; break;
      case WindowKind::rectangular: break;
    }
  }
  return w;
}

WindowKind parse_window_kind(const std::string& name) {
  if (name == "hann" || name == "hanning") return WindowKind::hann;
  if (name == "hamming") return WindowKind::hamming;
  if (name == "rectangular" || name == "boxcar") return WindowKind::rectangular;
  throw InvalidArgument(fmt::format("unknown window '{}'", name));
}

std::string to_string(WindowKind kind) {
  switch (kind) {
    case WindowKind::hann: return "hann";
    case WindowKind::hamming: return "hamming";
    case WindowKind::rectangular: return "rectangular";
  }
  return "?";
}

std::size_t spectrogram_window_length(double window_s, double sample_rate) {
  const double raw = window_s * sample_rate;
  if (!(raw >= 2.0)) throw InvalidArgument("spectrogram: window must span at least 2 samples");
  auto n = static_cast<std::size_t>(std::llround(raw));
  if (n % 2 != 0) n = (raw >= static_cast<double>(n)) ? n + 1 : n - 1;
  return std::max<std::size_t>(n, 2);
}

Spectrogram spectrogram(const AudioClip& clip, double window_s, double overlap,
                        WindowKind window) {
  if (!(overlap >= 0.0 && overlap < 1.0)) {
    throw InvalidArgument(fmt::format("spectrogram: overlap {} outside [0, 1)", overlap));
  }
  if (!(clip.sample_rate > 0.0)) throw InvalidArgument("spectrogram: sample_rate must be > 0");
  const std::size_t w_len = spectrogram_window_length(window_s, clip.sample_rate);
  const auto hop = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(w_len) * (1.0 - overlap))));
  const std::size_t n = clip.samples.size();
  const std::size_t steps = n >= w_len ? (n - w_len) / hop + 1 : 0;
  const std::size_t bins = w_len / 2 + 1;

  Spectrogram s;
  s.window_length = w_len;
  s.hop_length = hop;
  s.bin_hz = clip.sample_rate / static_cast<double>(w_len);
  s.hop_s = static_cast<double>(hop) / clip.sample_rate;
  s.overlap_fraction = overlap;
  s.window = window;
  s.intensities = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(bins),
                                        static_cast<Eigen::Index>(steps));
  if (steps == 0) return s;

  const std::vector<double> w = make_window(window, w_len);
  fft::RealPlan plan(w_len);
  std::vector<double> frame(w_len);
  std::vector<cplx> spec(bins);
  const double inv_n = 1.0 / static_cast<double>(w_len);
  for (std::size_t t = 0; t < steps; ++t) {
    const double* src = clip.samples.data() + t * hop;
    for (std::size_t i = 0; i < w_len; ++i) frame[i] = src[i] * w[i];
    plan.forward(frame, spec);
    for (std::size_t k = 0; k < bins; ++k) {
      const bool edge = (k == 0) || (k == w_len / 2);
      s.intensities(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)) =
          std::norm(spec[k]) * inv_n * (edge ? 1.0 : 2.0);
    }
  }
  return s;
}

Stft stft(std::span<const double> x, std::size_t n_fft, std::size_t hop, WindowKind window) {
  if (n_fft < 2 || hop == 0) throw InvalidArgument("stft: n_fft >= 2 and hop >= 1 required");
  Stft s;
  s.n_fft = n_fft;
  s.hop = hop;
  s.window = window;
  if (x.size() < n_fft) return s;
  const std::size_t steps = (x.size() - n_fft) / hop + 1;
  const std::vector<double> w = make_window(window, n_fft);
  fft::RealPlan plan(n_fft);
  std::vector<double> frame(n_fft);
  s.frames.resize(steps, std::vector<cplx>(n_fft / 2 + 1));
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < n_fft; ++i) frame[i] = x[t * hop + i] * w[i];
    plan.forward(frame, s.frames[t]);
  }
  return s;
}

std::vector<double> istft(const Stft& s, std::size_t length) {
  std::vector<double> out(length, 0.0), norm(length, 0.0);
  if (s.frames.empty()) return out;
  const std::vector<double> w = make_window(s.window, s.n_fft);
  fft::RealPlan plan(s.n_fft);
  std::vector<double> frame(s.n_fft);
  for (std::size_t t = 0; t < s.frames.size(); ++t) {
    plan.inverse(s.frames[t], frame);
    const std::size_t start = t * s.hop;
    for (std::size_t i = 0; i < s.n_fft && start + i < length; ++i) {
      out[start + i] += frame[i] * w[i];
      norm[start + i] += w[i] * w[i];
    }
  }
  for (std::size_t i = 0; i < length; ++i) {
    out[i] = norm[i] > 1e-10 ? out[i] / norm[i] : 0.0;
  }
  return out;
}

std::vector<double> resample(std::span<const double> x, double ratio) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) throw InvalidArgument("resample: ratio must be > 0");
  const auto out_n = static_cast<std::size_t>(std::llround(static_cast<double>(x.size()) * ratio));
  if (ratio == 1.0) return {x.begin(), x.end()};
  std::vector<double> y(out_n, 0.0);
  const double cutoff = std::min(1.0, ratio);  // relative to input Nyquist
  constexpr double kZeroCrossings = 24.0;
  const double half_width = kZeroCrossings / cutoff;
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  for (std::size_t m = 0; m < out_n; ++m) {
    const double t = static_cast<double>(m) / ratio;
    const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(t - half_width)));
    const auto hi = std::min<std::ptrdiff_t>(n - 1, static_cast<std::ptrdiff_t>(std::floor(t + half_width)));
    double acc = 0.0;
    for (std::ptrdiff_t i = lo; i <= hi; ++i) {
      const double d = t - static_cast<double>(i);
      const double arg = cutoff * d;
      const double sinc = arg == 0.0 ? 1.0 : std::sin(pi * arg) / (pi * arg);
      const double taper = 0.5 + 0.5 * std::cos(pi * d / half_width);
      acc += x[static_cast<std::size_t>(i)] * cutoff * sinc * taper;
    }
    y[m] = acc;
  }
  return y;
}

std::vector<double> time_stretch(std::span<const double> x, double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw InvalidArgument("time_stretch: rate must be > 0");
  const auto out_len = static_cast<std::size_t>(std::llround(static_cast<double>(x.size()) / rate));
  if (rate == 1.0) return {x.begin(), x.end()};
  constexpr std::size_t n_fft = 2048;
  constexpr std::size_t hop = n_fft / 4;

  std::vector<double> padded(n_fft / 2, 0.0);
  padded.insert(padded.end(), x.begin(), x.end());
  padded.resize(padded.size() + n_fft / 2 + n_fft, 0.0);
  const Stft in = stft(padded, n_fft, hop);
  if (in.frames.empty()) return std::vector<double>(out_len, 0.0);

  const std::size_t bins = n_fft / 2 + 1;
  const std::size_t n_frames = in.frames.size();
  Stft out;
  out.n_fft = n_fft;
  out.hop = hop;
  out.window = in.window;
  std::vector<double> phase(bins);
  for (std::size_t k = 0; k < bins; ++k) phase[k] = std::arg(in.frames[0][k]);
  for (double t = 0.0; t < static_cast<double>(n_frames); t += rate) {
    const auto i0 = static_cast<std::size_t>(t);
    const double alpha = t - static_cast<double>(i0);
    std::vector<cplx> frame(bins);
    for (std::size_t k = 0; k < bins; ++k) {
      const cplx c0 = in.frames[i0][k];
      const cplx c1 = i0 + 1 < n_frames ? in.frames[i0 + 1][k] : cplx{};
      const double mag = (1.0 - alpha) * std::abs(c0) + alpha * std::abs(c1);
      frame[k] = std::polar(mag, phase[k]);
      const double advance = 2.0 * pi * static_cast<double>(hop * k) / static_cast<double>(n_fft);
      double dphi = std::arg(c1) - std::arg(c0) - advance;
      dphi -= 2.0 * pi * std::round(dphi / (2.0 * pi));
      phase[k] += advance + dphi;
    }
    out.frames.push_back(std::move(frame));
  }
  std::vector<double> y = istft(out, out.frames.size() * hop + n_fft);
  std::vector<double> result(out_len, 0.0);
  for (std::size_t i = 0; i < out_len && i + n_fft / 2 < y.size(); ++i) result[i] = y[i + n_fft / 2];
  return result;
}

std::vector<double> pitch_shift(std::span<const double> x, double semitones) {
  if (semitones == 0.0) return {x.begin(), x.end()};
  const double ratio = std::pow(2.0, semitones / 12.0);
  std::vector<double> y = resample(time_stretch(x, 1.0 / ratio), 1.0 / ratio);
  y.resize(x.size(), 0.0);
  return y;
}

double mean_square(std::span<const double> x) {
  if (x.empty()) return 0.0;
  long double acc = 0.0L;
  for (double v : x) acc += static_cast<long double>(v) * v;
  return static_cast<double>(acc / static_cast<long double>(x.size()));
}

double rms(std::span<const double> x) { return std::sqrt(mean_square(x)); }

}  // namespace reef
