#include "reef/denoise_eval.hpp"
#include "reef/csv.hpp"
#include "reef/synth.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace reef;
using reef::test::make_clip;
using reef::test::TempDir;

namespace {

// Mann-Whitney estimate of P(positive > negative), ties counted half.
double mann_whitney(const std::vector<double>& v, const std::vector<bool>& m) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!m[i]) continue;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (m[j]) continue;
      pairs += 1.0;
      wins += v[i] > v[j] ? 1.0 : v[i] == v[j] ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

// Tone bursts in white noise; the clean part is the bursts alone.
EvalClip burst_clip(std::uint64_t seed, double snr_db, double fs = 8000.0) {
  Rng rng(seed);
  const std::size_t n = static_cast<std::size_t>(fs * 2);
  std::vector<double> clean(n, 0.0);
  for (int b = 0; b < 4; ++b) {
    const auto start = static_cast<std::size_t>(rng.uniform(0.05, 1.7) * fs);
    for (std::size_t i = 0; i < static_cast<std::size_t>(0.15 * fs); ++i) {
      const double w = std::sin(std::numbers::pi * static_cast<double>(i) / (0.15 * fs));
      clean[start + i] += w * std::sin(2 * std::numbers::pi * 700.0 * static_cast<double>(i) / fs);
    }
  }
  auto noise = reef::test::white(rng, 1.0, n);
  double pc = 0, pn = 0;
  for (std::size_t i = 0; i < n; ++i) {
    pc += clean[i] * clean[i];
    pn += noise[i] * noise[i];
  }
  const double g = std::sqrt(pc / (pn * std::pow(10.0, snr_db / 10.0)));
  std::vector<double> noisy(n);
  for (std::size_t i = 0; i < n; ++i) noisy[i] = clean[i] + g * noise[i];
  EvalClip c;
  c.pair_id = "p" + std::to_string(seed);
  c.snr_db = snr_db;
  c.clean = make_clip(clean, fs);
  c.noisy = make_clip(noisy, fs);
  return c;
}

void expect_monotone(const RocCurve& c) {
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    EXPECT_LT(c.points[i].threshold, c.points[i - 1].threshold);
    if (c.points[i].tpr && c.points[i - 1].tpr) {
      EXPECT_GE(*c.points[i].tpr, *c.points[i - 1].tpr);
    }
    if (c.points[i].fpr && c.points[i - 1].fpr) {
      EXPECT_GE(*c.points[i].fpr, *c.points[i - 1].fpr);
    }
  }
}

}  // namespace

TEST(Normalize, ExactEndpointsAndConstantWarns) {
  Envelope e{{3.0, 1.0, 5.0, 2.0}, 1000.0};
  const Envelope n = normalize_envelope(e);
  EXPECT_EQ(n.values[1], 0.0);
  EXPECT_EQ(n.values[2], 1.0);
  EXPECT_DOUBLE_EQ(n.values[0], 0.5);
  Diagnostics d;
  const Envelope z = normalize_envelope(Envelope{{2.0, 2.0}, 1000.0}, &d);
  EXPECT_EQ(z.values, (std::vector<double>{0.0, 0.0}));
  EXPECT_FALSE(d.empty());
}

TEST(Roc, StrictDetectionAtThreshold) {
  const std::vector<double> v{0.9, 0.5, 0.5, 0.1};
  const std::vector<bool> m{true, true, false, false};
  const std::vector<double> thr{0.5};
  const RocCurve c = roc(v, m, thr);
  ASSERT_EQ(c.points.size(), 1u);
  EXPECT_DOUBLE_EQ(*c.points[0].tpr, 0.5);
  EXPECT_DOUBLE_EQ(*c.points[0].fpr, 0.0);
}

TEST(Roc, AucMatchesMannWhitney) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.uniform_int(5, 300));
    std::vector<double> v(n);
    std::vector<bool> m(n);
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = rng.bernoulli(0.4);
      // coarse grid forces ties; strictly positive so the sweep reaches (1, 1)
      v[i] = (1.0 + static_cast<double>(rng.uniform_int(0, 20))) / 21.0;
      if (m[i]) v[i] = std::min(1.0, v[i] + 0.1);
    }
    if (std::count(m.begin(), m.end(), true) == 0 || std::count(m.begin(), m.end(), false) == 0) continue;
    const RocCurve c = roc(v, m);
    ASSERT_TRUE(c.auc);
    EXPECT_NEAR(*c.auc, mann_whitney(v, m), 1e-12);
    expect_monotone(c);
  }
}

TEST(Roc, UndefinedRatesWithOneClass) {
  const std::vector<double> v{0.2, 0.4};
  const RocCurve c = roc(v, std::vector<bool>{true, true});
  EXPECT_FALSE(c.auc);
  EXPECT_TRUE(c.points.front().tpr);
  EXPECT_FALSE(c.points.front().fpr);
}

TEST(Roc, DefaultThresholdsUniqueDescending) {
  const std::vector<double> v{0.3, 0.3, 0.123456};
  const auto t = default_thresholds(v);
  EXPECT_TRUE(std::is_sorted(t.rbegin(), t.rend()));
  EXPECT_EQ(std::adjacent_find(t.begin(), t.end()), t.end());
  EXPECT_NE(std::find(t.begin(), t.end(), 0.123456), t.end());
  EXPECT_EQ(t.front(), 1.0);
  EXPECT_EQ(t.back(), 0.0);
}

TEST(Protocol, IdentityOnCleanAndZeroOutput) {
  const EvalClip c = burst_clip(1, 0.0);
  const Envelope clean = evaluation_envelope(c.clean);
  const auto mask = label_signal_events(clean);
  const std::vector<double> thr{0.5, kEventLevel, 0.0};
  const RocCurve id = roc(clean.values, mask, thr);
  EXPECT_EQ(*id.points[1].tpr, 1.0);
  EXPECT_EQ(*id.points[1].fpr, 0.0);
  EXPECT_DOUBLE_EQ(*roc(clean.values, mask).auc, 1.0);
  const std::vector<double> zeros(clean.values.size(), 0.0);
  EXPECT_EQ(*roc(zeros, mask).auc, 0.0);
}

TEST(Protocol, EvaluationEnvelopeBlocksToOneKilohertz) {
  const EvalClip c = burst_clip(2, 0.0, 8000.0);
  const Envelope e = evaluation_envelope(c.clean);
  EXPECT_EQ(e.values.size(), 2000u);
  EXPECT_DOUBLE_EQ(e.sample_rate, 1000.0);
  EXPECT_EQ(*std::max_element(e.values.begin(), e.values.end()), 1.0);
  EXPECT_EQ(*std::min_element(e.values.begin(), e.values.end()), 0.0);
}

TEST(Gate, KeepsLengthRemovesNoiseKeepsTone) {
  const double fs = 8000.0;
  Rng rng(3);
  AudioClip noise = make_clip(reef::test::white(rng, 0.1, 16000), fs);
  noise.site_id = "x";
  const AudioClip out = spectral_gate_denoise(noise);
  EXPECT_EQ(out.samples.size(), noise.samples.size());
  EXPECT_EQ(out.site_id, "x");
  EXPECT_LT(rms(out.samples), 0.2 * rms(noise.samples));

  auto tone = reef::test::sine(1000.0, 0.5, fs, 16000);
  for (std::size_t i = 0; i < tone.size(); ++i) tone[i] += noise.samples[i];
  const AudioClip t = spectral_gate_denoise(make_clip(tone, fs));
  EXPECT_NEAR(rms(std::span(t.samples).subspan(2000, 12000)), 0.5 / std::sqrt(2.0), 0.05);
  EXPECT_THROW(spectral_gate_denoise(make_clip(std::vector<double>(100, 0.1), fs)), InvalidArgument);
}

TEST(Evaluate, ConditionsFromGridAndExclusions) {
  std::vector<EvalClip> clips;
  for (std::uint64_t s = 0; s < 3; ++s) clips.push_back(burst_clip(s, -5.02));
  for (std::uint64_t s = 3; s < 6; ++s) clips.push_back(burst_clip(s, 5.0));
  clips.push_back(burst_clip(9, 12.0));
  FunctionDenoiser gate("gate", [](const AudioClip& c) { return spectral_gate_denoise(c); });
  EvalOptions opt;
  opt.snr_grid = {-5.0, 5.0};
  opt.per_clip = true;
  const EvalResult r = evaluate_clips(clips, gate, opt);
  ASSERT_EQ(r.conditions.size(), 2u);
  EXPECT_EQ(r.conditions[0].snr_db, -5.0);
  EXPECT_EQ(r.conditions[0].pairs_used, 3u);
  EXPECT_EQ(r.conditions[1].clips.size(), 3u);
  ASSERT_EQ(r.excluded.size(), 1u);
  EXPECT_EQ(r.excluded[0].rfind("p9:", 0), 0u);
  for (const auto& c : r.conditions) {
    expect_monotone(c.noisy);
    expect_monotone(c.denoised);
    EXPECT_GT(*c.denoised.auc, *c.noisy.auc);
  }

  FunctionDenoiser shorter("short", [](const AudioClip& c) {
    AudioClip o = c;
    o.samples.pop_back();
    return o;
  });
  const EvalResult bad = evaluate_clips({clips[0]}, shorter, {});
  EXPECT_TRUE(bad.conditions.empty());
  EXPECT_EQ(bad.excluded.size(), 1u);
}

TEST(Evaluate, CsvRoundTrip) {
  TempDir dir("eval");
  std::vector<EvalClip> clips{burst_clip(1, 0.0), burst_clip(2, 0.0)};
  FunctionDenoiser id("identity", [](const AudioClip& c) { return c; });
  const EvalResult r = evaluate_clips(clips, id, {});
  write_eval_csvs(dir / "roc.csv", dir / "auc.csv", r);
  const auto curves = read_roc_csv(dir / "roc.csv");
  ASSERT_EQ(curves.size(), 2u);
  EXPECT_EQ(curves[0].points.size(), r.conditions[0].noisy.points.size());
  EXPECT_NEAR(*curves[1].auc, *r.conditions[0].denoised.auc, 1e-12);
  const auto summary = read_csv(dir / "auc.csv");
  EXPECT_EQ(summary.header, (std::vector<std::string>{"condition", "snr_db", "auc"}));
}

namespace {

// Writes two pairs to disk and returns the manifest rows.
std::vector<PairManifest> disk_pairs(const TempDir& dir) {
  std::vector<PairManifest> out;
  for (std::uint64_t s = 0; s < 2; ++s) {
    const EvalClip c = burst_clip(s, 0.0);
    PairManifest m;
    m.pair_id = c.pair_id;
    m.snr_db = 0.0;
    m.clean_path = (dir / ("clean/" + c.pair_id + ".wav")).string();
    m.noisy_path = (dir / ("noisy/" + c.pair_id + ".wav")).string();
    std::filesystem::create_directories(dir / "clean");
    std::filesystem::create_directories(dir / "noisy");
    write_wav(m.clean_path, c.clean, SampleFormat::float64);
    write_wav(m.noisy_path, c.noisy, SampleFormat::float64);
    out.push_back(m);
  }
  return out;
}

}  // namespace

TEST(PluginContract, DirectoryAndExecutableMatchInProcess) {
  TempDir dir("plug");
  const auto pairs = disk_pairs(dir);
  FunctionDenoiser id("identity", [](const AudioClip& c) { return c; });
  const EvalResult ref = evaluate_denoiser(pairs, id);

  DirectoryDenoiser from_dir(dir / "noisy");
  const EvalResult rd = evaluate_denoiser(pairs, from_dir);
  ASSERT_EQ(rd.conditions.size(), 1u);
  EXPECT_EQ(*rd.conditions[0].denoised.auc, *ref.conditions[0].denoised.auc);

  const auto script = dir / "copy.sh";
  reef::test::spit(script, "#!/bin/sh\nset -e\nmkdir -p \"$2\"\ncp \"$1\"/*.wav \"$2\"/\n");
  std::filesystem::permissions(script, std::filesystem::perms::owner_all);
  ExecutableDenoiser exe(script, dir / "work");
  const EvalResult re = evaluate_denoiser(pairs, exe);
  ASSERT_EQ(re.conditions.size(), 1u);
  EXPECT_EQ(*re.conditions[0].denoised.auc, *ref.conditions[0].denoised.auc);
  EXPECT_EQ(re.denoiser_id, "exe:copy.sh");

  DirectoryDenoiser empty(dir / "nothing_here");
  const EvalResult rx = evaluate_denoiser(pairs, empty);
  EXPECT_TRUE(rx.conditions.empty());
  EXPECT_EQ(rx.excluded.size(), 2u);

  const auto failing = dir / "fail.sh";
  reef::test::spit(failing, "#!/bin/sh\nexit 3\n");
  std::filesystem::permissions(failing, std::filesystem::perms::owner_all);
  ExecutableDenoiser broken(failing, dir / "work2");
  EXPECT_THROW(evaluate_denoiser(pairs, broken), InputError);
}
