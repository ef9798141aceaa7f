#include "reef/cli.hpp"
#include "reef/csv.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <fmt/format.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <sstream>

using namespace reef;
using reef::cli::RunConfig;
using reef::test::TempDir;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result reefpam(std::vector<std::string> args) {
  args.insert(args.begin(), "reefpam");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Two 12 s recordings per site at 16 kHz with a few planted transients.
void write_recordings(const TempDir& dir) {
  std::filesystem::create_directories(dir / "audio");
  for (const char* name : {"reefA_20210301T000000Z.wav", "reefA_20210302T120000Z.wav", "reefB_20210301T060000Z.wav"}) {
    Rng rng(std::hash<std::string>{}(name));
    const double fs = 16000.0;
    auto x = reef::test::white(rng, 0.01, static_cast<std::size_t>(fs * 12));
    for (int k = 0; k < 30; ++k) {
      const auto i0 = static_cast<std::size_t>(rng.uniform(0, 11.9) * fs);
      for (std::size_t j = 0; j < 80; ++j) {
        x[i0 + j] += 0.4 * std::exp(-static_cast<double>(j) / 20.0) * std::sin(static_cast<double>(j) * 2.2);
      }
    }
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += 0.05 * std::sin(2 * std::numbers::pi * 400.0 * static_cast<double>(i) / fs);
    write_wav(dir / "audio" / name, reef::test::make_clip(x, fs));
  }
}

}  // namespace

TEST(Config, StrictKeysAndTypes) {
  EXPECT_NO_THROW(cli::parse_config(R"({"seed": 3, "mix": {"count": 4}})"));
  try {
    cli::parse_config(R"({"seed": 3, "sed": 4, "mix": {"cuont": 1}})");
    FAIL();
  } catch (const InvalidArgument& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("mix.cuont"), std::string::npos) << m;
  }
  EXPECT_THROW(cli::parse_config(R"({"sed": 4})"), InvalidArgument);
  EXPECT_THROW(cli::parse_config(R"({"workers": "two"})"), InvalidArgument);
  EXPECT_THROW(cli::parse_config(R"({"workers": -1})"), InvalidArgument);
  EXPECT_THROW(cli::parse_config(R"({"correlate": {"mode": "sideways"}})"), InvalidArgument);
  EXPECT_THROW(cli::parse_config("{not json"), InvalidArgument);
}

TEST(Config, ValuesAndRelativePaths) {
  const RunConfig c = cli::parse_config(
      R"({"seed": 9, "workers": 2, "out_dir": "o", "bands": {"low": [50, 900]},
          "aci": {"window_s": 0.064, "window": "hamming"},
          "mix": {"signals": "banks/s.csv", "snr_db": -5, "augment": {"probability": 0.2}},
          "denoise_eval": {"snr_grid": [-10, 0], "denoiser": "identity"},
          "report": {"kinds": ["roc", "diel"], "format": "png"}})",
      "/base");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.workers, 2u);
  EXPECT_EQ(c.out_dir, std::filesystem::path("/base/o"));
  EXPECT_EQ(c.index.low.f_lo, 50.0);
  EXPECT_EQ(c.index.high.f_hi, 48000.0);
  EXPECT_EQ(c.index.aci.window, WindowKind::hamming);
  EXPECT_EQ(*c.mix.signals, std::filesystem::path("/base/banks/s.csv"));
  EXPECT_EQ(*c.mix.recipe.snr_db, -5.0);
  EXPECT_EQ(c.mix.recipe.augment.probability, 0.2);
  EXPECT_EQ(c.eval.snr_grid, (std::vector<double>{-10, 0}));
  EXPECT_EQ(c.report.kinds, (std::vector<FigureKind>{FigureKind::roc, FigureKind::diel}));
  EXPECT_EQ(c.report.format, ImageFormat::png);
  RunConfig bad = c;
  bad.index.aci.overlap = 1.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Cli, UsageErrorsAreFatal) {
  EXPECT_EQ(reefpam({}).code, cli::kFatal);
  EXPECT_EQ(reefpam({"frobnicate"}).code, cli::kFatal);
  EXPECT_EQ(reefpam({"--help"}).code, cli::kOk);
}

TEST(Cli, MissingInputsListedTogether) {
  TempDir dir("cli");
  const auto r = reefpam({"--out-dir", dir.path().string(), "correlate", "--indices", (dir / "a.csv").string(),
                          "--transects", (dir / "b.csv").string()});
  EXPECT_EQ(r.code, cli::kFatal);
  EXPECT_NE(r.err.find("a.csv"), std::string::npos);
  EXPECT_NE(r.err.find("b.csv"), std::string::npos);
}

TEST(Cli, ConfigFromEnvironmentAndFlagOverride) {
  TempDir dir("cli");
  reef::test::spit(dir / "cfg.json", R"({"out_dir": "from_env", "correlate": {"indices": "x.csv"}})");
  ::setenv(cli::kConfigEnv, (dir / "cfg.json").string().c_str(), 1);
  const auto r = reefpam({"correlate"});
  ::unsetenv(cli::kConfigEnv);
  EXPECT_EQ(r.code, cli::kFatal);
  EXPECT_NE(r.err.find((dir / "x.csv").string()), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("correlate.transects is not set"), std::string::npos) << r.err;

  reef::test::spit(dir / "bad.json", R"({"wrokers": 2})");
  const auto b = reefpam({"--config", (dir / "bad.json").string(), "report"});
  EXPECT_EQ(b.code, cli::kFatal);
  EXPECT_NE(b.err.find("wrokers"), std::string::npos);
}

TEST(Cli, IndicesDeterministicAcrossWorkers) {
  TempDir dir("cli");
  write_recordings(dir);
  std::vector<std::string> files;
  for (const char* n : {"reefA_20210301T000000Z.wav", "reefA_20210302T120000Z.wav", "reefB_20210301T060000Z.wav"}) {
    files.push_back((dir / "audio" / n).string());
  }
  auto run_with = [&](const std::string& workers, const std::string& out) {
    std::vector<std::string> a{"--workers", workers, "--out-dir", (dir / out).string(), "indices", "--segment-s", "6"};
    a.insert(a.end(), files.begin(), files.end());
    return reefpam(a);
  };
  const auto r1 = run_with("1", "o1");
  ASSERT_EQ(r1.code, cli::kOk) << r1.err;
  ASSERT_EQ(run_with("3", "o3").code, cli::kOk);
  const std::string a = reef::test::slurp(dir / "o1" / "indices.csv");
  EXPECT_EQ(a, reef::test::slurp(dir / "o3" / "indices.csv"));
  const auto series = read_index_csv(dir / "o1" / "indices.csv");
  ASSERT_EQ(series.size(), 8u);  // 2 sites x 4 kinds
  EXPECT_EQ(series[0].points.size(), 4u);  // 2 files x 2 segments
  EXPECT_TRUE(series[0].relative_db || !is_decibel(series[0].kind));
  EXPECT_TRUE(std::filesystem::exists(dir / "o1" / "indices_log.jsonl"));

  // an unstamped file is skipped and the run is partial
  std::filesystem::copy_file(files[0], dir / "audio" / "nostamp.wav");
  const auto p = reefpam({"--out-dir", (dir / "o4").string(), "indices", "--segment-s", "6", files[0],
                          (dir / "audio" / "nostamp.wav").string()});
  EXPECT_EQ(p.code, cli::kPartial);
  const std::string log = reef::test::slurp(dir / "o4" / "indices_log.jsonl");
  EXPECT_NE(log.find("\"status\":\"skipped\""), std::string::npos);
}

TEST(Cli, IngestWritesRecordingTable) {
  TempDir dir("cli");
  write_recordings(dir);
  reef::test::spit(dir / "m.csv",
                   "file_path,site_id,deployment_id,start_time_iso8601,sensitivity_db,fullscale_v,gain_db\n"
                   "audio/reefA_20210301T000000Z.wav,reefA,d1,,-165,1,0\n");
  const auto r = reefpam({"--out-dir", (dir / "o").string(), "ingest", "--manifest", (dir / "m.csv").string()});
  EXPECT_EQ(r.code, cli::kOk) << r.err;
  const CsvTable t = read_csv(dir / "o" / "recordings.csv");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][t.column("calibrated")], "1");
  EXPECT_EQ(t.rows[0][t.column("status")], "ok");
}

TEST(Cli, MixThenEvaluateThenReport) {
  TempDir dir("cli");
  const double fs = 8000.0;
  std::filesystem::create_directories(dir / "bank");
  std::string sig = "path,source,split\n", noi = "path,source,split\n";
  Rng rng(1);
  for (int i = 0; i < 3; ++i) {
    auto x = reef::test::sine(500.0 + 150.0 * i, 0.3, fs, 4000);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] *= std::sin(std::numbers::pi * static_cast<double>(j) / 4000.0);
    write_wav(dir / "bank" / ("s" + std::to_string(i) + ".wav"), reef::test::make_clip(x, fs));
    sig += "s" + std::to_string(i) + ".wav,Fish,train\n";
  }
  write_wav(dir / "bank" / "n0.wav", reef::test::make_clip(reef::test::white(rng, 0.05, 40000), fs));
  noi += "n0.wav,Reef,train\n";
  reef::test::spit(dir / "bank" / "signals.csv", sig);
  reef::test::spit(dir / "bank" / "noise.csv", noi);

  auto mix = [&](const std::string& out, const std::string& workers) {
    return reefpam({"--seed", "11", "--workers", workers, "--out-dir", (dir / out).string(), "mix", "--signals",
                    (dir / "bank" / "signals.csv").string(), "--noise", (dir / "bank" / "noise.csv").string(),
                    "--count", "4", "--segment-s", "2", "--snr-db", "0"});
  };
  const auto m1 = mix("d1", "1");
  ASSERT_EQ(m1.code, cli::kOk) << m1.err;
  ASSERT_EQ(mix("d2", "2").code, cli::kOk);
  EXPECT_EQ(reef::test::slurp(dir / "d1" / "train_manifest.csv"), reef::test::slurp(dir / "d2" / "train_manifest.csv"));
  EXPECT_EQ(reef::test::slurp(dir / "d1" / "train" / "noisy" / "train-000003.wav"),
            reef::test::slurp(dir / "d2" / "train" / "noisy" / "train-000003.wav"));
  EXPECT_EQ(mix("d1", "1").code, cli::kFatal);  // refuses to overwrite

  const auto ev = reefpam({"--out-dir", (dir / "ev").string(), "denoise-eval", "--manifest",
                           (dir / "d1" / "train_manifest.csv").string(), "--snr", "0"});
  ASSERT_EQ(ev.code, cli::kOk) << ev.err;
  const CsvTable summary = read_csv(dir / "ev" / "auc_summary.csv");
  EXPECT_EQ(summary.rows.size(), 2u);

  const auto rep = reefpam({"--out-dir", (dir / "fig").string(), "report", "--roc", (dir / "ev" / "roc.csv").string()});
  EXPECT_EQ(rep.code, cli::kOk) << rep.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "fig" / "roc.svg"));
}

TEST(Cli, CorrelateAndCompositeFromCsv) {
  TempDir dir("cli");
  std::vector<IndexSeries> series;
  std::string tr = "site_id,survey_date,live_coral_richness,live_coral_size,live_coral_cover,dead_coral_cover,"
                   "invertebrate_cover,algal_cover,macroalgal_cover\n";
  Rng rng(2);
  for (int s = 0; s < 6; ++s) {
    const std::string site = "S" + std::to_string(s);
    const double coral = 10.0 + 10.0 * s;
    tr += fmt::format("{},2021-03-01,10,20,{},5,3,30,{}\n", site, coral, 5 + s);
    tr += fmt::format("{},2021-03-11,10,20,{},5,3,30,{}\n", site, coral + rng.uniform(-2, 2), 6 + s);
    for (IndexKind k : {IndexKind::snap_rate, IndexKind::spl_low, IndexKind::aci_low}) {
      IndexSeries x;
      x.site_id = site;
      x.kind = k;
      for (int d = 0; d < 10; ++d) {
        const Timestamp t = reef::test::ts("2021-03-01T12:00:00Z") + std::chrono::days{d};
        x.points.push_back({t, (k == IndexKind::snap_rate ? coral / 10 : 100 + s) + rng.normal(0, 0.3)});
      }
      series.push_back(x);
    }
  }
  write_index_csv(dir / "idx.csv", series);
  reef::test::spit(dir / "tr.csv", tr);

  const auto c = reefpam({"--out-dir", (dir / "o").string(), "correlate", "--indices", (dir / "idx.csv").string(),
                          "--transects", (dir / "tr.csv").string(), "--mode", "spatial"});
  ASSERT_EQ(c.code, cli::kOk) << c.err;
  const auto rows = read_correlation_csv(dir / "o" / "correlation.csv");
  const auto it = std::find_if(rows.begin(), rows.end(), [](const CorrelationCsvRow& r) {
    return r.index_kind == "snap_rate" && r.reef_parameter == "live_coral_cover";
  });
  ASSERT_NE(it, rows.end());
  EXPECT_GT(*it->r, 0.95);

  const auto m = reefpam({"--out-dir", (dir / "o").string(), "composite", "--indices", (dir / "idx.csv").string(),
                          "--transects", (dir / "tr.csv").string()});
  EXPECT_NE(m.code, cli::kFatal) << m.err;
  const CsvTable t = read_csv(dir / "o" / "composite_temporal.csv");
  EXPECT_EQ(t.header.front(), "reef_parameter");
  EXPECT_GE(t.rows.size(), 1u);
}

TEST(Cli, ExecutableExitCodes) {
  TempDir dir("cli");
  const std::string exe = REEFPAM_EXE;
  EXPECT_EQ(std::system((exe + " --help > /dev/null").c_str()), 0);
  const int status = std::system((exe + " --out-dir " + dir.path().string() + " denoise-eval --manifest " +
                                  (dir / "absent.csv").string() + " 2> /dev/null")
                                     .c_str());
  EXPECT_EQ(WEXITSTATUS(status), 1);
}
