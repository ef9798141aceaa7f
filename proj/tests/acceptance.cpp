// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include "reef/cli.hpp"
#include "reef/denoise_eval.hpp"
#include "reef/indices.hpp"
#include "reef/stats.hpp"
#include "reef/synth.hpp"
#include "support.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace reef;
using reef::test::make_clip;
using reef::test::TempDir;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double rel_err(double got, double want) {
  return want == 0.0 ? std::abs(got) : std::abs(got - want) / std::abs(want);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- ACI

Spectrogram row_spec(const std::vector<double>& row) {
  Spectrogram s;
  s.intensities = Eigen::MatrixXd::Zero(2, static_cast<Eigen::Index>(row.size()));
  for (std::size_t t = 0; t < row.size(); ++t) s.intensities(1, static_cast<Eigen::Index>(t)) = row[t];
  s.bin_hz = 500.0;
  s.hop_s = 0.1;
  return s;
}

Outcome aci_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  const BandSpec band{100.0, 1000.0, BandName::custom};
  struct Case {
    std::vector<double> row;
    double want;
  };
  const std::vector<Case> cases{{{1, 2, 4}, 3.0 / 7.0}, {{1, 0, 1, 0}, 1.5}, {{3, 3, 3, 3, 3}, 0.0}};
  double worst = 0.0;
  for (const auto& c : cases) worst = std::max(worst, rel_err(aci(row_spec(c.row), band, c.row.size()), c.want));

  Rng rng(2024);
  double worst_scale = 0.0;
  for (int k = 0; k < 100; ++k) {
    Spectrogram s;
    const auto bins = static_cast<Eigen::Index>(rng.uniform_int(4, 40));
    const auto steps = static_cast<Eigen::Index>(rng.uniform_int(4, 60));
    s.intensities.resize(bins, steps);
    for (Eigen::Index i = 0; i < bins; ++i)
      for (Eigen::Index j = 0; j < steps; ++j) s.intensities(i, j) = rng.exponential(1.0);
    s.bin_hz = 50.0;
    s.hop_s = 0.1;
    const BandSpec b{50.0, 50.0 * static_cast<double>(bins - 1), BandName::custom};
    const auto seg = static_cast<std::size_t>(rng.uniform_int(2, steps));
    const double a = aci(s, b, seg);
    Spectrogram scaled = s;
    scaled.intensities *= rng.uniform(1e-3, 1e3);
    worst_scale = std::max(worst_scale, rel_err(aci(scaled, b, seg), a));
  }
  const double elapsed = seconds_since(t0);
  return {worst <= 1e-12 && worst_scale <= 1e-12 && elapsed < 1.0,
          fmt::format("hand cases max rel err {:.2e}, scale invariance max rel err {:.2e} over 100, {:.3f} s", worst,
                      worst_scale, elapsed)};
}

// ---- snaps

// Poisson train of decaying ringing transients in white noise.
struct SnapClip {
  AudioClip clip;
  std::size_t planted = 0;
};

SnapClip snap_clip(double lambda, double T, double fs, std::uint64_t seed) {
  Rng rng(seed);
  const double sigma = 0.01;
  const double amp = 100.0 * sigma;
  const double tau = 0.0015;
  auto x = reef::test::white(rng, sigma, static_cast<std::size_t>(T * fs));
  const auto ring = static_cast<std::size_t>(10 * tau * fs);
  std::size_t planted = 0;
  for (double t = rng.exponential(lambda); t < T; t += rng.exponential(lambda)) {
    ++planted;
    const double f = rng.uniform(3000.0, 12000.0);
    const double ph = rng.uniform(0.0, 2 * std::numbers::pi);
    const auto i0 = static_cast<std::size_t>(t * fs);
    for (std::size_t j = 0; j < ring && i0 + j < x.size(); ++j) {
      const double tt = static_cast<double>(j) / fs;
      x[i0 + j] += amp * std::exp(-tt / tau) * std::cos(2 * std::numbers::pi * f * tt + ph);
    }
  }
  return {make_clip(std::move(x), fs), planted};
}

Outcome snap_pipeline() {
  const auto t0 = std::chrono::steady_clock::now();
  const double fs = 48000.0, T = 60.0;
  int good = 0;
  std::string worst;
  double worst_z = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double lambda = 0.5 + 9.5 * k / 19.0;
    const SnapClip c = snap_clip(lambda, T, fs, 7000 + static_cast<std::uint64_t>(k));
    const double est = snap_rate(detect_snaps(c.clip), T);
    const double tol = 3.0 * std::sqrt(lambda * T) / T;
    const double z = std::abs(est - lambda) / tol;
    if (z <= 1.0) ++good;
    if (z > worst_z) {
      worst_z = z;
      worst = fmt::format("lambda {:.2f}: est {:.3f}, planted {}", lambda, est, c.planted);
    }
  }
  const double elapsed = seconds_since(t0);
  return {good >= 19 && elapsed < 30.0,
          fmt::format("{}/20 clips within tolerance (worst {} at {:.2f} of tolerance), {:.1f} s", good, worst, worst_z,
                      elapsed)};
}

// ---- SPL

Outcome spl_calibration() {
  TempDir dir("acc_spl");
  const double fs = 48000.0;
  const Calibration cal{};  // -165 dB re V/µPa, 1 V full scale
  const double counts_per_pa_rms = std::sqrt(2.0) * 1e6 / cal.upa_per_count();
  std::vector<std::string> notes;
  bool ok = true;
  for (const auto& [band, f] : {std::pair{low_band(), 500.0}, std::pair{high_band(20000.0), 5000.0}}) {
    double level[2]{};
    for (int s = 0; s < 2; ++s) {
      const double scale = s == 0 ? 1.0 : 10.0;
      const auto path = dir / fmt::format("tone_{}_{}.wav", f, s);
      write_wav(path, make_clip(reef::test::sine(f, scale * counts_per_pa_rms, fs, static_cast<std::size_t>(10 * fs)), fs),
                SampleFormat::float32);
      const auto lv = spl(read_wav(path, cal), band);
      if (!lv || lv->relative) {
        ok = false;
        notes.push_back("no calibrated level");
        continue;
      }
      level[s] = lv->db;
    }
    ok = ok && std::abs(level[0] - 120.0) <= 0.1 && std::abs(level[1] - level[0] - 20.0) <= 0.01;
    notes.push_back(fmt::format("{} Hz: {:.4f} dB, x10 shift {:.4f} dB", f, level[0], level[1] - level[0]));
  }
  return {ok, fmt::format("{}", fmt::join(notes, "; "))};
}

// ---- evaluation protocol

EvalClip call_clip(std::uint64_t seed, double fs = 8000.0) {
  Rng rng(seed);
  const std::size_t n = static_cast<std::size_t>(fs * 3);
  std::vector<double> clean(n, 0.0);
  for (int b = 0; b < 5; ++b) {
    const auto start = static_cast<std::size_t>(rng.uniform(0.05, 2.6) * fs);
    const double f0 = rng.uniform(300.0, 1500.0);
    const auto len = static_cast<std::size_t>(0.25 * fs);
    for (std::size_t i = 0; i < len; ++i) {
      const double w = std::sin(std::numbers::pi * static_cast<double>(i) / static_cast<double>(len));
      const double tt = static_cast<double>(i) / fs;
      clean[start + i] += w * std::sin(2 * std::numbers::pi * (f0 + 400.0 * tt) * tt);
    }
  }
  EvalClip c;
  c.pair_id = fmt::format("c{}", seed);
  c.clean = make_clip(clean, fs);
  c.noisy = c.clean;
  return c;
}

// Threshold descending, rates non-decreasing.
bool monotone(const RocCurve& c) {
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    const auto& a = c.points[i - 1];
    const auto& b = c.points[i];
    if (!(b.threshold < a.threshold)) return false;
    if (a.tpr && b.tpr && *b.tpr < *a.tpr) return false;
    if (a.fpr && b.fpr && *b.fpr < *a.fpr) return false;
  }
  return true;
}

Outcome roc_protocol() {
  const EvalClip c = call_clip(1);
  const Envelope clean = evaluation_envelope(c.clean);
  const auto mask = label_signal_events(clean);
  const std::vector<double> thr{0.5, kEventLevel, 0.0};
  const RocCurve at_tau = roc(clean.values, mask, thr);
  const bool id_point = at_tau.points[1].tpr == 1.0 && at_tau.points[1].fpr == 0.0;
  const RocCurve id = roc(clean.values, mask);
  const std::vector<double> zeros(clean.values.size(), 0.0);
  const RocCurve zero = roc(zeros, mask);
  std::vector<RocCurve> curves{at_tau, id, zero};

  double lo = 1.0, hi = 0.0;
  bool noise_ok = true;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const EvalClip cs = call_clip(100 + s);
    const auto m = label_signal_events(evaluation_envelope(cs.clean));
    Rng rng(500 + s);
    std::vector<double> u(m.size());
    for (auto& v : u) v = rng.uniform();
    const RocCurve r = roc(u, m);
    curves.push_back(r);
    lo = std::min(lo, *r.auc);
    hi = std::max(hi, *r.auc);
    noise_ok = noise_ok && std::abs(*r.auc - 0.5) <= 0.05;
  }
  const bool mono = std::all_of(curves.begin(), curves.end(), monotone);
  const bool ok = id_point && id.auc == 1.0 && zero.auc == 0.0 && noise_ok && mono;
  return {ok, fmt::format("identity (tpr, fpr) at 0.01 = ({}, {}), AUC {}; zero AUC {}; noise AUC in [{:.3f}, {:.3f}] "
                          "over 20 seeds; {} curves monotone: {}",
                          *at_tau.points[1].tpr, *at_tau.points[1].fpr, *id.auc, *zero.auc, lo, hi, curves.size(),
                          mono ? "yes" : "no")};
}

// ---- denoising

BankEntry mem_entry(const std::string& name, std::vector<double> x, double fs) {
  BankEntry e;
  e.path = name;
  e.source = "synthetic";
  e.duration_s = static_cast<double>(x.size()) / fs;
  e.audio = std::make_shared<const AudioClip>(make_clip(std::move(x), fs));
  return e;
}

Outcome denoising_improves() {
  const auto t0 = std::chrono::steady_clock::now();
  const double fs = 8000.0;
  SoundBank calls;
  calls.role = BankRole::signal;
  for (int i = 0; i < 6; ++i) {
    const double f0 = 400.0 + 180.0 * i;
    const double len = 0.3 + 0.05 * i;
    const auto n = static_cast<std::size_t>(len * fs);
    std::vector<double> x(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double tt = static_cast<double>(j) / fs;
      const double w = std::sin(std::numbers::pi * static_cast<double>(j) / static_cast<double>(n));
      x[j] = 0.3 * w * (std::sin(2 * std::numbers::pi * (f0 + 300.0 * tt) * tt) +
                        0.3 * std::sin(4 * std::numbers::pi * (f0 + 300.0 * tt) * tt));
    }
    calls.entries.push_back(mem_entry(fmt::format("call{}.wav", i), std::move(x), fs));
  }
  SoundBank noise;
  noise.role = BankRole::noise;
  Rng nrng(77);
  for (int i = 0; i < 3; ++i) {
    noise.entries.push_back(mem_entry(fmt::format("noise{}.wav", i), reef::test::white(nrng, 0.05, static_cast<std::size_t>(20 * fs)), fs));
  }

  const std::vector<double> grid{-10.0, -5.0, 0.0, 5.0};
  std::vector<EvalClip> clips;
  std::size_t idx = 0;
  for (double snr : grid) {
    MixRecipe recipe;
    recipe.segment_len_s = 4.0;
    recipe.snr_db = snr;
    recipe.n_signals_min = 2;
    recipe.n_signals_max = 4;
    recipe.augment.probability = 0.0;
    recipe.seed = 31;
    for (int k = 0; k < 8; ++k, ++idx) {
      Rng rng = pair_rng(recipe.seed, Split::test, idx);
      const MixedPair p = make_pair(calls, noise, recipe, rng);
      clips.push_back({fmt::format("p{}", idx), p.manifest.snr_db, p.clean, p.noisy});
    }
  }
  FunctionDenoiser gate("gate", [](const AudioClip& a) { return spectral_gate_denoise(a); });
  EvalOptions opt;
  opt.snr_grid = grid;
  const EvalResult res = evaluate_clips(clips, gate, opt);
  bool ok = res.conditions.size() == grid.size() && res.excluded.empty();
  std::vector<std::string> parts;
  for (const auto& c : res.conditions) {
    const bool better = c.noisy.auc && c.denoised.auc && *c.denoised.auc > *c.noisy.auc;
    ok = ok && better && monotone(c.noisy) && monotone(c.denoised);
    parts.push_back(fmt::format("{:+.0f} dB: {:.3f} -> {:.3f}", c.snr_db, c.noisy.auc.value_or(NAN),
                                c.denoised.auc.value_or(NAN)));
  }
  const double elapsed = seconds_since(t0);
  ok = ok && elapsed < 120.0;
  return {ok, fmt::format("AUC noisy -> gated: {}; {:.1f} s", fmt::join(parts, ", "), elapsed)};
}

// ---- cyclic fit

Outcome cyclic_fit() {
  std::vector<CyclicObservation> obs;
  for (int k = 0; k < 24; ++k) {
    const double d = k * 365.0 / 24.0;
    obs.push_back({d, 10.0 * std::cos(2 * std::numbers::pi * (d - 180.0) / 365.0) + 30.0});
  }
  const CyclicFit f = fit_cyclic(obs);
  const double err = std::max({std::abs(f.A - 10.0), std::abs(f.B - 30.0), std::abs(f.phi.value_or(-1.0) - 180.0)});
  int good = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    Rng rng(9000 + s);
    std::vector<CyclicObservation> noisy = obs;
    for (auto& o : noisy) o.cover += rng.normal();
    const CyclicFit g = fit_cyclic(noisy);
    if (std::abs(g.A - 10.0) <= 1.5 && std::abs(g.B - 30.0) <= 1.5) ++good;
  }
  return {err <= 1e-6 && good >= 95,
          fmt::format("noiseless max error {:.2e}; noisy A and B within 1.5 in {}/100 seeds", err, good)};
}

// ---- composite regression

Eigen::MatrixXd random_design(Rng& rng, Eigen::Index n) {
  Eigen::MatrixXd X(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = rng.uniform(0.5, 15.0);
    X(i, 1) = rng.uniform(105.0, 140.0);
    X(i, 2) = rng.uniform(150.0, 260.0);
  }
  return X;
}

Outcome composite_regression() {
  Rng rng(42);
  const Eigen::MatrixXd X = random_design(rng, 40);
  const std::array<double, 4> planted{0.2, -0.066, 0.038, -53.42};
  Eigen::VectorXd y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) y(i) = 0.2 * X(i, 0) - 0.066 * X(i, 1) + 0.038 * X(i, 2) - 53.42;
  const CompositeModel m = fit_composite(X, y);
  double coef_err = 0.0;
  for (std::size_t j = 0; j < 4; ++j) coef_err = std::max(coef_err, std::abs(m.coef[j] - planted[j]));

  Eigen::VectorXd yn = y;
  for (Eigen::Index i = 0; i < yn.size(); ++i) yn(i) += rng.normal(0.0, 0.5);
  const CompositeModel mn = fit_composite(X, yn);
  double orth = 0.0;
  for (Eigen::Index j = 0; j < 4; ++j) {
    const Eigen::VectorXd col = j < 3 ? Eigen::VectorXd(X.col(j)) : Eigen::VectorXd::Ones(X.rows());
    orth = std::max(orth, std::abs(col.dot(mn.residuals)) / (col.norm() * mn.residuals.norm()));
  }

  int null_ok = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    Rng r(3000 + s);
    const Eigen::MatrixXd Xs = random_design(r, 50);
    Eigen::VectorXd t(50);
    for (Eigen::Index i = 0; i < 50; ++i) t(i) = r.normal(20.0, 5.0);
    const CompositeModel mm = fit_composite(Xs, t);
    if (mm.p_value && *mm.p_value > 0.05) ++null_ok;
  }

  CompositeModel named = mn;
  named.reef_parameter = "live_coral_cover";
  const std::string csv = composite_csv_text({named});
  const std::string header = csv.substr(0, csv.find('\n'));
  const bool schema = header == "reef_parameter,a_i,b_i,c_i,d_i,p_a,p_b,p_c,p_d,R,p";
  return {coef_err <= 1e-9 && orth <= 1e-8 && null_ok >= 90 && schema,
          fmt::format("planted max coef error {:.2e}; residual orthogonality {:.2e}; null p > 0.05 in {}/100; "
                      "header {}",
                      coef_err, orth, null_ok, schema ? "ok" : header)};
}

// ---- statistics

Outcome statistics() {
  // x, y centred with correlation exactly 0.8 by construction.
  Rng rng(5);
  const std::size_t n = 12;
  Eigen::VectorXd a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a(static_cast<Eigen::Index>(i)) = rng.normal();
    b(static_cast<Eigen::Index>(i)) = rng.normal();
  }
  a.array() -= a.mean();
  a.normalize();
  b.array() -= b.mean();
  b -= b.dot(a) * a;
  b.normalize();
  const Eigen::VectorXd y = 0.8 * a + 0.6 * b;
  const std::vector<double> xs(a.data(), a.data() + n), ys(y.data(), y.data() + n);
  const CorrelationResult r = pearson(xs, ys);

  const double t_formula = 0.8 * std::sqrt(10.0 / (1.0 - 0.64));
  const boost::math::students_t dist(10.0);
  const double p_oracle = 2.0 * boost::math::cdf(boost::math::complement(dist, t_formula));
  const bool stat_ok = r.r && std::abs(*r.r - 0.8) <= 1e-12 && r.t && std::abs(*r.t - 4.216) <= 5e-4 && r.p_value &&
                       std::abs(*r.p_value - p_oracle) <= 1e-3 && std::abs(*r.p_value - 0.0018) <= 1e-4 &&
                       r.tier == Tier::p01;

  const std::vector<std::pair<double, Tier>> cuts{
      {0.05, Tier::ns},      {std::nextafter(0.05, 0.0), Tier::p05},  {0.01, Tier::p05},
      {std::nextafter(0.01, 0.0), Tier::p01}, {0.001, Tier::p01}, {std::nextafter(0.001, 0.0), Tier::p001},
      {0.5, Tier::ns},       {0.0, Tier::p001}};
  bool tiers_ok = true;
  for (const auto& [p, want] : cuts) tiers_ok = tiers_ok && significance_tier(p) == want;
  return {stat_ok && tiers_ok,
          fmt::format("r {:.12f}, t {:.4f}, p {:.6f} (oracle {:.6f}), tier {}; boundary tiers {}", r.r.value_or(NAN),
                      r.t.value_or(NAN), r.p_value.value_or(NAN), p_oracle, to_string(r.tier),
                      tiers_ok ? "ok" : "mismatch")};
}

// ---- determinism

int reefpam(std::vector<std::string> args) {
  args.insert(args.begin(), "reefpam");
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

// Every regular file under `root`, keyed by relative path.
std::map<std::string, std::string> tree(const std::filesystem::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[std::filesystem::relative(e.path(), root).generic_string()] = reef::test::slurp(e.path());
  }
  return files;
}

Outcome determinism() {
  TempDir dir("acc_det");
  std::filesystem::create_directories(dir / "audio");
  std::vector<std::string> recordings;
  for (const char* name : {"reefA_20210301T000000Z.wav", "reefA_20210301T000200Z.wav", "reefB_20210301T060000Z.wav"}) {
    const double fs = 16000.0;
    const SnapClip c = snap_clip(3.0, 120.0, fs, std::hash<std::string>{}(name));
    AudioClip clip = c.clip;
    for (std::size_t i = 0; i < clip.samples.size(); ++i)
      clip.samples[i] += 0.05 * std::sin(2 * std::numbers::pi * 300.0 * static_cast<double>(i) / fs);
    write_wav(dir / "audio" / name, clip);
    recordings.push_back((dir / "audio" / name).string());
  }
  auto indices = [&](const std::string& workers, const std::string& out) {
    std::vector<std::string> a{"--seed", "7", "--workers", workers, "--out-dir", (dir / out).string(), "indices",
                               "--segment-s", "30"};
    a.insert(a.end(), recordings.begin(), recordings.end());
    return reefpam(a);
  };

  const double fs = 8000.0;
  std::filesystem::create_directories(dir / "bank");
  std::string sig = "path,source,split\n", noi = "path,source,split\n";
  for (int i = 0; i < 4; ++i) {
    auto x = reef::test::sine(450.0 + 120.0 * i, 0.3, fs, 3000);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] *= std::sin(std::numbers::pi * static_cast<double>(j) / 3000.0);
    write_wav(dir / "bank" / fmt::format("s{}.wav", i), make_clip(x, fs));
    sig += fmt::format("s{}.wav,Fish,train\n", i);
  }
  Rng rng(3);
  write_wav(dir / "bank" / "n0.wav", make_clip(reef::test::white(rng, 0.05, 48000), fs));
  noi += "n0.wav,Reef,train\n";
  reef::test::spit(dir / "bank" / "signals.csv", sig);
  reef::test::spit(dir / "bank" / "noise.csv", noi);
  auto mix = [&](const std::string& workers, const std::string& out) {
    return reefpam({"--seed", "11", "--workers", workers, "--out-dir", (dir / out).string(), "mix", "--signals",
                    (dir / "bank" / "signals.csv").string(), "--noise", (dir / "bank" / "noise.csv").string(),
                    "--count", "6", "--segment-s", "2"});
  };

  const std::vector<int> codes{indices("1", "i1"), indices("1", "i2"), indices("4", "i4"),
                               mix("1", "m1"),     mix("1", "m2"),     mix("4", "m4")};
  const bool all_ok = std::all_of(codes.begin(), codes.end(), [](int c) { return c == cli::kOk; });
  const auto i1 = tree(dir / "i1");
  const auto m1 = tree(dir / "m1");
  const bool idx_same = i1.count("indices.csv") && i1 == tree(dir / "i2") && i1 == tree(dir / "i4");
  const bool mix_same = m1.count("train_manifest.csv") && m1 == tree(dir / "m2") && m1 == tree(dir / "m4");
  return {all_ok && idx_same && mix_same,
          fmt::format("exit codes {}; indices {} files identical across reruns and 1/4 workers: {}; mix {} files: {}",
                      fmt::join(codes, ","), i1.size(), idx_same ? "yes" : "no", m1.size(), mix_same ? "yes" : "no")};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
      {"aci_correctness", aci_correctness},   {"snap_pipeline", snap_pipeline},
      {"spl_calibration", spl_calibration},   {"roc_protocol", roc_protocol},
      {"denoising_improves_auc", denoising_improves}, {"cyclic_fit", cyclic_fit},
      {"composite_regression", composite_regression}, {"statistics", statistics},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : checks) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed", checks.size() - static_cast<std::size_t>(failed), checks.size())
            << std::endl;
  return failed == 0 ? 0 : 1;
}
