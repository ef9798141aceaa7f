#include "reef/cli.hpp"

#include "reef/csv.hpp"
#include "reef/parallel.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace reef::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Typed, strict view of one JSON object.
class Section {
 public:
  Section(const json& j, std::string where, fs::path base)
      : j_(j), where_(std::move(where)), base_(std::move(base)) {
    if (!j_.is_object()) throw InvalidArgument(fmt::format("config: {} must be an object", label()));
  }

  ~Section() = default;

  void number(const char* key, double& dst) {
    if (const json* v = find(key)) {
      if (!v->is_number()) type_error(key, "a number");
      dst = v->get<double>();
    }
  }

  void optional_number(const char* key, std::optional<double>& dst) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        dst.reset();
        return;
      }
      if (!v->is_number()) type_error(key, "a number or null");
      dst = v->get<double>();
    }
  }

  template <typename T>
  void count(const char* key, T& dst) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer() || v->get<std::int64_t>() < 0) type_error(key, "a non-negative integer");
      dst = static_cast<T>(v->get<std::uint64_t>());
    }
  }

  void integer(const char* key, int& dst) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) type_error(key, "an integer");
      dst = v->get<int>();
    }
  }

  void boolean(const char* key, bool& dst) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) type_error(key, "true or false");
      dst = v->get<bool>();
    }
  }

  bool string(const char* key, std::string& dst) {
    if (const json* v = find(key)) {
      if (!v->is_string()) type_error(key, "a string");
      dst = v->get<std::string>();
      return true;
    }
    return false;
  }

  void path(const char* key, fs::path& dst) {
    std::string s;
    if (string(key, s)) dst = resolve(s);
  }

  void path(const char* key, std::optional<fs::path>& dst) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        dst.reset();
        return;
      }
      std::string s;
      string(key, s);
      dst = resolve(s);
    }
  }

  void paths(const char* key, std::vector<fs::path>& dst) {
    if (const json* v = find(key)) {
      if (!v->is_array()) type_error(key, "an array of strings");
      dst.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) type_error(key, "an array of strings");
        dst.push_back(resolve(e.get<std::string>()));
      }
    }
  }

  void numbers(const char* key, std::vector<double>& dst) {
    if (const json* v = find(key)) {
      if (!v->is_array()) type_error(key, "an array of numbers");
      dst.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) type_error(key, "an array of numbers");
        dst.push_back(e.get<double>());
      }
    }
  }

  void pair(const char* key, double& a, double& b) {
    if (const json* v = find(key)) {
      if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
        type_error(key, "a [low, high] pair of numbers");
      }
      a = (*v)[0].get<double>();
      b = (*v)[1].get<double>();
    }
  }

  void strings(const char* key, std::vector<std::string>& dst) {
    if (const json* v = find(key)) {
      if (!v->is_array()) type_error(key, "an array of strings");
      dst.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) type_error(key, "an array of strings");
        dst.push_back(e.get<std::string>());
      }
    }
  }

  // Parses an enum-valued string with `parse`; errors name the key.
  template <typename E, typename Parse>
  void choice(const char* key, E& dst, Parse parse) {
    std::string s;
    if (!string(key, s)) return;
    try {
      dst = parse(s);
    } catch (const std::exception& e) {
      throw InvalidArgument(fmt::format("config: {}.{}: {}", where_, key, e.what()));
    }
  }

  std::optional<Section> sub(const char* key) {
    if (const json* v = find(key)) return Section(*v, where_.empty() ? key : where_ + "." + key, base_);
    return std::nullopt;
  }

  // Rejects every key that was never asked for.
  void finish() const {
    std::vector<std::string> unknown;
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) unknown.push_back(where_.empty() ? k : where_ + "." + k);
    }
    if (!unknown.empty()) {
      throw InvalidArgument(fmt::format("config: unknown key(s): {}", fmt::join(unknown, ", ")));
    }
  }

 private:
  const json* find(const char* key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  [[noreturn]] void type_error(const char* key, const char* expected) const {
    throw InvalidArgument(fmt::format("config: {}{}{} must be {}", where_, where_.empty() ? "" : ".", key, expected));
  }

  std::string label() const { return where_.empty() ? "top level" : where_; }

  fs::path resolve(const std::string& s) const {
    fs::path p(s);
    return p.is_relative() && !base_.empty() ? base_ / p : p;
  }

  const json& j_;
  std::string where_;
  fs::path base_;
  std::set<std::string> used_;
};

BandSpec band_from(double lo, double hi, BandName name) {
  BandSpec b;
  b.f_lo = lo;
  b.f_hi = hi;
  b.name = name;
  return b;
}

}  // namespace

void RunConfig::validate() const {
  if (workers == 0) throw InvalidArgument("workers must be >= 1");
  if (!(segment_s > 0.0)) throw InvalidArgument("segment_s must be > 0");
  for (const BandSpec& b : {index.low, index.high}) {
    if (!(b.f_lo > 0.0 && b.f_hi > b.f_lo)) {
      throw InvalidArgument(fmt::format("band {}: need 0 < low < high", b.label()));
    }
  }
  if (!(index.aci.window_s > 0.0)) throw InvalidArgument("aci.window_s must be > 0");
  if (!(index.aci.overlap >= 0.0 && index.aci.overlap < 1.0)) throw InvalidArgument("aci.overlap must be in [0, 1)");
  if (!(index.aci.segment_s > 0.0)) throw InvalidArgument("aci.segment_s must be > 0");
  if (!(index.snaps.percentile > 0.0 && index.snaps.percentile < 100.0)) {
    throw InvalidArgument("snaps.percentile must be in (0, 100)");
  }
  if (!(index.snaps.refractory_s >= 0.0)) throw InvalidArgument("snaps.refractory_s must be >= 0");
  mix.recipe.validate();
  if (mix.count == 0) throw InvalidArgument("mix.count must be >= 1");
  if (!(eval.snr_tolerance_db >= 0.0)) throw InvalidArgument("denoise_eval.snr_tolerance_db must be >= 0");
  if (!(report.dpi > 0.0)) throw InvalidArgument("report.dpi must be > 0");
  if (report.diel_bin_minutes <= 0 || 1440 % report.diel_bin_minutes != 0) {
    throw InvalidArgument("report.diel_bin_minutes must divide 1440");
  }
}

RunConfig parse_config(std::string_view text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(fmt::format("config: not valid JSON: {}", e.what()));
  }
  RunConfig c;
  Section top(j, "", base_dir);
  top.count("seed", c.seed);
  top.count("workers", c.workers);
  top.path("out_dir", c.out_dir);
  top.number("segment_s", c.segment_s);
  if (auto s = top.sub("bands")) {
    double lo = c.index.low.f_lo, hi = c.index.low.f_hi;
    s->pair("low", lo, hi);
    c.index.low = band_from(lo, hi, BandName::low);
    lo = c.index.high.f_lo;
    hi = c.index.high.f_hi;
    s->pair("high", lo, hi);
    c.index.high = band_from(lo, hi, BandName::high);
    s->finish();
  }
  if (auto s = top.sub("aci")) {
    s->number("window_s", c.index.aci.window_s);
    s->number("overlap", c.index.aci.overlap);
    s->choice("window", c.index.aci.window, parse_window_kind);
    s->number("segment_s", c.index.aci.segment_s);
    s->finish();
  }
  if (auto s = top.sub("snaps")) {
    s->number("percentile", c.index.snaps.percentile);
    s->number("refractory_s", c.index.snaps.refractory_s);
    double lo = 0.0, hi = 0.0;
    s->pair("prefilter", lo, hi);
    if (hi > 0.0) c.index.snaps.prefilter = band_from(lo, hi, BandName::custom);
    s->finish();
  }
  if (auto s = top.sub("ingest")) {
    s->path("manifest", c.ingest.manifest);
    s->finish();
  }
  if (auto s = top.sub("indices")) {
    s->path("manifest", c.indices.manifest);
    s->paths("inputs", c.indices.inputs);
    s->boolean("denoised", c.indices.denoised);
    s->string("output", c.indices.output);
    s->finish();
  }
  if (auto s = top.sub("mix")) {
    auto& m = c.mix;
    s->path("signals", m.signals);
    s->path("noise", m.noise);
    s->choice("split", m.split, parse_split);
    s->count("count", m.count);
    double lo = m.recipe.n_signals_min, hi = m.recipe.n_signals_max;
    s->pair("n_signals", lo, hi);
    m.recipe.n_signals_min = static_cast<int>(lo);
    m.recipe.n_signals_max = static_cast<int>(hi);
    s->number("segment_s", m.recipe.segment_len_s);
    s->optional_number("snr_db", m.recipe.snr_db);
    s->boolean("loop_short_noise", m.recipe.loop_short_noise);
    s->number("sample_rate", m.recipe.sample_rate);
    s->number("peak_limit", m.recipe.peak_limit);
    s->boolean("overwrite", m.overwrite);
    if (auto a = s->sub("augment")) {
      a->number("probability", m.recipe.augment.probability);
      a->number("max_semitones", m.recipe.augment.max_semitones);
      a->pair("stretch", m.recipe.augment.stretch_min, m.recipe.augment.stretch_max);
      a->pair("drive", m.recipe.augment.drive_min, m.recipe.augment.drive_max);
      a->finish();
    }
    s->finish();
  }
  if (auto s = top.sub("denoise_eval")) {
    s->path("manifest", c.eval.manifest);
    s->string("denoiser", c.eval.denoiser);
    s->numbers("snr_grid", c.eval.snr_grid);
    s->number("snr_tolerance_db", c.eval.snr_tolerance_db);
    s->boolean("per_clip", c.eval.per_clip);
    s->finish();
  }
  if (auto s = top.sub("correlate")) {
    s->path("indices", c.correlate.indices);
    s->path("transects", c.correlate.transects);
    s->choice("mode", c.correlate.mode, parse_correlation_mode);
    s->boolean("windowed_mean", c.correlate.windowed_mean);
    s->boolean("denoised", c.correlate.denoised);
    s->choice("cyclic_parameter", c.correlate.cyclic_parameter, parse_reef_parameter);
    s->finish();
  }
  if (auto s = top.sub("composite")) {
    s->path("indices", c.composite.indices);
    s->path("transects", c.composite.transects);
    s->path("design", c.composite.design);
    s->choice("mode", c.composite.mode, parse_correlation_mode);
    s->boolean("standardize", c.composite.standardize);
    s->boolean("denoised", c.composite.denoised);
    s->choice("spl_kind", c.composite.spl_kind, parse_index_kind);
    s->finish();
  }
  if (auto s = top.sub("report")) {
    s->path("indices", c.report.indices);
    s->path("roc", c.report.roc);
    s->path("correlation", c.report.correlation);
    std::vector<std::string> kinds;
    s->strings("kinds", kinds);
    for (const auto& k : kinds) c.report.kinds.push_back(parse_figure_kind(k));
    s->choice("format", c.report.format, parse_image_format);
    s->number("dpi", c.report.dpi);
    s->integer("diel_bin_minutes", c.report.diel_bin_minutes);
    s->finish();
  }
  top.finish();
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open config {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

namespace {

struct LogEntry {
  std::string file;
  std::string status;  // ok | skipped | excluded
  std::string message;
};

struct Context {
  const RunConfig& cfg;
  std::ostream& out;
  std::ostream& err;
  std::string command;
  std::vector<LogEntry> log;
  Diagnostics diag;
  bool partial = false;

  void record(std::string file, std::string status, std::string message = {}) {
    if (status != "ok") partial = true;
    log.push_back({std::move(file), std::move(status), std::move(message)});
  }

  void write_log() const {
    std::string text;
    for (const auto& e : log) {
      json j = {{"file", e.file}, {"status", e.status}};
      if (!e.message.empty()) j["message"] = e.message;
      text += j.dump() + "\n";
    }
    fs::create_directories(cfg.out_dir);
    write_file_atomic(cfg.out_dir / (command + "_log.jsonl"), text);
  }
};

// Thrown after every missing input has been listed.
void require(const std::vector<std::pair<std::string, std::optional<fs::path>>>& named,
             const std::vector<fs::path>& files) {
  std::vector<std::string> problems;
  for (const auto& [name, p] : named) {
    if (!p) problems.push_back(fmt::format("{} is not set", name));
    else if (!fs::exists(*p)) problems.push_back(fmt::format("{}: {} does not exist", name, p->string()));
  }
  for (const auto& f : files) {
    if (!fs::exists(f)) problems.push_back(fmt::format("missing input {}", f.string()));
  }
  if (!problems.empty()) {
    throw InputError(fmt::format("{} input problem(s):\n  {}", problems.size(), fmt::join(problems, "\n  ")));
  }
}

int finish(Context& ctx) {
  ctx.write_log();
  return ctx.partial ? kPartial : kOk;
}

int cmd_ingest(Context& ctx) {
  const auto& cfg = ctx.cfg;
  require({{"ingest.manifest", cfg.ingest.manifest}}, {});
  const auto metas = read_recording_manifest(*cfg.ingest.manifest, &ctx.diag);
  std::vector<fs::path> files;
  for (const auto& m : metas) files.push_back(m.file_path);
  require({}, files);
  CsvTable t;
  t.header = {"file_path", "site_id", "deployment_id", "start_time_iso8601", "duration_s",
              "sample_rate", "calibrated", "status"};
  for (const auto& m : metas) {
    std::string status = "ok";
    try {
      const WavInfo info = read_wav_info(m.file_path);
      if (info.channels != 1) status = fmt::format("{} channels, mono required", info.channels);
      else if (!m.start_time) status = "no start time";
      else if (m.site_id.empty()) status = "no site id";
    } catch (const std::exception& e) {
      status = e.what();
    }
    ctx.record(m.file_path.string(), status == "ok" ? "ok" : "skipped", status == "ok" ? "" : status);
    t.rows.push_back({m.file_path.generic_string(), m.site_id, m.deployment_id,
                      m.start_time ? format_iso8601(*m.start_time) : "", format_double(m.duration_s),
                      format_double(m.sample_rate), m.calibration ? "1" : "0", status});
  }
  fs::create_directories(cfg.out_dir);
  write_csv(cfg.out_dir / "recordings.csv", t);
  ctx.out << fmt::format("ingest: {} recording(s) -> {}\n", metas.size(), (cfg.out_dir / "recordings.csv").string());
  return finish(ctx);
}

// Band edges above Nyquist are pulled down to it for lower-rate files.
IndexConfig config_for(const IndexConfig& base, double sample_rate, Diagnostics& diag,
                       const std::string& file) {
  IndexConfig c = base;
  const double nyq = sample_rate / 2.0;
  for (BandSpec* b : {&c.low, &c.high}) {
    if (b->f_hi > nyq) {
      diag.warn(fmt::format("{}: band {} capped at Nyquist {} Hz", file, b->label(), nyq));
      b->f_hi = nyq;
    }
  }
  return c;
}

int cmd_indices(Context& ctx) {
  const auto& cfg = ctx.cfg;
  std::vector<RecordingMeta> metas;
  if (cfg.indices.manifest) {
    require({{"indices.manifest", cfg.indices.manifest}}, {});
    metas = read_recording_manifest(*cfg.indices.manifest, &ctx.diag);
  }
  for (const auto& p : cfg.indices.inputs) {
    RecordingMeta m;
    m.file_path = p;
    metas.push_back(m);
  }
  if (metas.empty()) throw InputError("indices: no inputs (set indices.manifest or pass WAV files)");
  std::vector<fs::path> files;
  for (const auto& m : metas) files.push_back(m.file_path);
  require({}, files);

  struct FileResult {
    bool ok = false;
    std::string message;
    std::string site;
    bool relative = false;
    std::vector<std::pair<IndexKind, IndexPoint>> points;
    Diagnostics diag;
  };
  std::vector<FileResult> results(metas.size());
  const bool from_manifest = cfg.indices.manifest.has_value();
  const std::size_t n_manifest = from_manifest ? metas.size() - cfg.indices.inputs.size() : 0;

  parallel_for(metas.size(), cfg.workers, [&](std::size_t i) {
    auto& r = results[i];
    const auto& meta = metas[i];
    const std::string name = meta.file_path.string();
    try {
      const AudioClip clip = i < n_manifest ? read_wav(meta, &r.diag)
                                            : read_wav(meta.file_path, std::nullopt, &r.diag);
      if (!clip.start_time) {
        r.message = "no start time (manifest or <site>_<YYYYMMDD>T<HHMMSS>Z.wav name required)";
        return;
      }
      if (clip.site_id.empty()) {
        r.message = "no site id";
        return;
      }
      const auto segs = segment(clip, cfg.segment_s);
      if (segs.empty()) {
        r.message = fmt::format("shorter than one {} s segment", cfg.segment_s);
        return;
      }
      const IndexConfig icfg = config_for(cfg.index, clip.sample_rate, r.diag, name);
      r.site = clip.site_id;
      r.relative = !clip.calibrated();
      for (std::size_t k = 0; k < segs.size(); ++k) {
        const Timestamp t = offset_seconds(*clip.start_time, static_cast<double>(k) * cfg.segment_s);
        const ClipIndices ci = compute_indices(segs[k], icfg);
        if (ci.spl_low) r.points.push_back({IndexKind::spl_low, {t, ci.spl_low->db}});
        else r.diag.warn(fmt::format("{} segment {}: silent low band, no SPL", name, k));
        if (ci.spl_high) r.points.push_back({IndexKind::spl_high, {t, ci.spl_high->db}});
        else r.diag.warn(fmt::format("{} segment {}: silent high band, no SPL", name, k));
        r.points.push_back({IndexKind::aci_low, {t, ci.aci_low}});
        r.points.push_back({IndexKind::snap_rate, {t, ci.snap_rate}});
      }
      r.ok = true;
    } catch (const std::exception& e) {
      r.message = e.what();
    }
  });

  std::map<std::pair<std::string, IndexKind>, IndexSeries> merged;
  std::map<std::string, std::set<bool>> calibration_seen;
  for (std::size_t i = 0; i < results.size(); ++i) {
    auto& r = results[i];
    for (const auto& w : r.diag.warnings()) ctx.diag.warn(w);
    ctx.record(metas[i].file_path.string(), r.ok ? "ok" : "skipped", r.message);
    if (!r.ok) continue;
    calibration_seen[r.site].insert(r.relative);
    for (const auto& [kind, p] : r.points) {
      auto& s = merged[{r.site, kind}];
      s.site_id = r.site;
      s.kind = kind;
      s.denoised = cfg.indices.denoised;
      s.relative_db = s.relative_db || r.relative;
      s.points.push_back(p);
    }
  }
  for (const auto& [site, seen] : calibration_seen) {
    if (seen.size() > 1) {
      ctx.diag.warn(fmt::format("site {} mixes calibrated and uncalibrated files; its dB values are relative", site));
    }
  }
  std::vector<IndexSeries> out;
  for (auto& [key, s] : merged) {
    std::stable_sort(s.points.begin(), s.points.end(),
                     [](const IndexPoint& a, const IndexPoint& b) { return a.time < b.time; });
    std::vector<IndexPoint> unique;
    for (const auto& p : s.points) {
      if (!unique.empty() && unique.back().time == p.time) {
        ctx.diag.warn(fmt::format("{} {}: duplicate timestamp {} dropped", s.site_id, to_string(s.kind),
                                  format_iso8601(p.time)));
        continue;
      }
      unique.push_back(p);
    }
    s.points = std::move(unique);
    out.push_back(std::move(s));
  }
  fs::create_directories(cfg.out_dir);
  const fs::path path = cfg.out_dir / cfg.indices.output;
  write_index_csv(path, out);
  std::size_t rows = 0;
  for (const auto& s : out) rows += s.points.size();
  ctx.out << fmt::format("indices: {} file(s), {} row(s) -> {}\n", metas.size(), rows, path.string());
  return finish(ctx);
}

int cmd_mix(Context& ctx) {
  const auto& cfg = ctx.cfg;
  require({{"mix.signals", cfg.mix.signals}, {"mix.noise", cfg.mix.noise}}, {});
  const auto sig = read_bank_csv(*cfg.mix.signals);
  const auto noi = read_bank_csv(*cfg.mix.noise);
  std::vector<fs::path> files;
  for (const auto& e : sig) files.push_back(e.path);
  for (const auto& e : noi) files.push_back(e.path);
  require({}, files);
  std::vector<BankEntry> all = sig;
  all.insert(all.end(), noi.begin(), noi.end());
  check_bank_hygiene(all);

  MixRecipe recipe = cfg.mix.recipe;
  recipe.seed = cfg.seed;
  const SoundBank sb = select_split(sig, BankRole::signal, cfg.mix.split);
  const SoundBank nb = select_split(noi, BankRole::noise, cfg.mix.split);
  DatasetOptions opt;
  opt.out_dir = cfg.out_dir;
  opt.workers = cfg.workers;
  opt.overwrite = cfg.mix.overwrite;
  const auto pairs = build_dataset(sb, nb, recipe, cfg.mix.count, opt);
  for (const auto& p : pairs) ctx.record(p.noisy_path, "ok");
  ctx.out << fmt::format("mix: {} {} pair(s) -> {}\n", pairs.size(), to_string(cfg.mix.split),
                         (cfg.out_dir / (to_string(cfg.mix.split) + "_manifest.csv")).string());
  return finish(ctx);
}

std::unique_ptr<Denoiser> make_denoiser(const std::string& spec, const fs::path& work_dir) {
  if (spec == "gate") {
    return std::make_unique<FunctionDenoiser>("spectral_gate", [](const AudioClip& c) {
      return spectral_gate_denoise(c);
    });
  }
  if (spec == "identity") {
    return std::make_unique<FunctionDenoiser>("identity", [](const AudioClip& c) { return c; });
  }
  if (spec.rfind("dir:", 0) == 0) {
    const fs::path dir = spec.substr(4);
    require({{"denoiser directory", dir}}, {});
    return std::make_unique<DirectoryDenoiser>(dir);
  }
  if (spec.rfind("exe:", 0) == 0) {
    const fs::path exe = spec.substr(4);
    require({{"denoiser executable", exe}}, {});
    return std::make_unique<ExecutableDenoiser>(exe, work_dir);
  }
  throw InvalidArgument(fmt::format("unknown denoiser '{}' (gate, identity, dir:<path>, exe:<path>)", spec));
}

int cmd_denoise_eval(Context& ctx) {
  const auto& cfg = ctx.cfg;
  require({{"denoise_eval.manifest", cfg.eval.manifest}}, {});
  const auto pairs = read_manifest_csv(*cfg.eval.manifest);
  if (pairs.empty()) throw InputError("denoise-eval: manifest has no pairs");
  std::vector<fs::path> files;
  for (const auto& p : pairs) {
    files.emplace_back(p.clean_path);
    files.emplace_back(p.noisy_path);
  }
  require({}, files);
  auto den = make_denoiser(cfg.eval.denoiser, cfg.out_dir / "denoiser_work");
  EvalOptions opt;
  opt.snr_grid = cfg.eval.snr_grid;
  opt.snr_tolerance_db = cfg.eval.snr_tolerance_db;
  opt.per_clip = cfg.eval.per_clip;
  opt.workers = cfg.workers;
  const EvalResult res = evaluate_denoiser(pairs, *den, opt, &ctx.diag);
  std::set<std::string> excluded;
  for (const auto& e : res.excluded) {
    const auto id = e.substr(0, e.find(':'));
    excluded.insert(id);
  }
  for (const auto& p : pairs) {
    if (excluded.count(p.pair_id)) {
      std::string reason;
      for (const auto& e : res.excluded) {
        if (e.rfind(p.pair_id + ":", 0) == 0) reason = e.substr(p.pair_id.size() + 2);
      }
      ctx.record(p.noisy_path, "excluded", reason);
    } else {
      ctx.record(p.noisy_path, "ok");
    }
  }
  fs::create_directories(cfg.out_dir);
  write_eval_csvs(cfg.out_dir / "roc.csv", cfg.out_dir / "auc_summary.csv", res);
  ctx.out << fmt::format("denoise-eval ({}): {:>8} {:>10} {:>10}\n", res.denoiser_id, "snr_db", "auc_noisy",
                         "auc_denoised");
  for (const auto& c : res.conditions) {
    auto f = [](const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string("n/a"); };
    ctx.out << fmt::format("{:>{}} {:>8g} {:>10} {:>10}\n", "", 16 + res.denoiser_id.size(), c.snr_db,
                           f(c.noisy.auc), f(c.denoised.auc));
  }
  if (res.conditions.empty()) throw InputError("denoise-eval: no usable pairs");
  return finish(ctx);
}

std::vector<IndexSeries> load_series(const fs::path& path, bool denoised) {
  auto all = read_index_csv(path);
  std::vector<IndexSeries> out;
  for (auto& s : all) {
    if (s.denoised == denoised) out.push_back(std::move(s));
  }
  if (out.empty()) {
    throw InputError(fmt::format("{} has no {} series", path.string(), denoised ? "denoised" : "non-denoised"));
  }
  return out;
}

int cmd_correlate(Context& ctx) {
  const auto& cfg = ctx.cfg;
  require({{"correlate.indices", cfg.correlate.indices}, {"correlate.transects", cfg.correlate.transects}}, {});
  const auto series = load_series(*cfg.correlate.indices, cfg.correlate.denoised);
  const auto records = read_transect_csv(*cfg.correlate.transects);
  CorrelateOptions opt;
  opt.mode = cfg.correlate.mode;
  opt.windowed_mean = cfg.correlate.windowed_mean;
  opt.cyclic_parameter = cfg.correlate.cyclic_parameter;
  std::map<IndexKind, std::vector<IndexSeries>> by_kind;
  for (const auto& s : series) by_kind[s.kind].push_back(s);
  std::vector<CorrelationRow> rows;
  for (const auto& [kind, group] : by_kind) {
    auto r = correlate_index(group, records, opt);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  fs::create_directories(cfg.out_dir);
  write_correlation_csv(cfg.out_dir / "correlation.csv", rows);
  for (const auto& r : rows) {
    const auto& c = r.result;
    ctx.out << fmt::format("{:<10} {:<20} {:<10} n={:<4} r={:<8} p={:<10} {}\n", to_string(r.index),
                           to_string(r.parameter), r.site_id, c.n, c.r ? fmt::format("{:.3f}", *c.r) : "undef",
                           c.p_value ? fmt::format("{:.3g}", *c.p_value) : "undef",
                           c.defined() ? to_string(c.tier) : "");
  }
  ctx.record(cfg.correlate.indices->string(), "ok");
  ctx.record(cfg.correlate.transects->string(), "ok");
  return finish(ctx);
}

int cmd_composite(Context& ctx) {
  const auto& cfg = ctx.cfg;
  CompositeData data;
  if (cfg.composite.design) {
    require({{"composite.design", cfg.composite.design}}, {});
    data = read_design_csv(*cfg.composite.design);
    ctx.record(cfg.composite.design->string(), "ok");
  } else {
    require({{"composite.indices", cfg.composite.indices}, {"composite.transects", cfg.composite.transects}}, {});
    const auto series = load_series(*cfg.composite.indices, cfg.composite.denoised);
    const auto records = read_transect_csv(*cfg.composite.transects);
    data = build_composite_data(series, records, cfg.composite.mode, cfg.composite.spl_kind);
    ctx.record(cfg.composite.indices->string(), "ok");
    ctx.record(cfg.composite.transects->string(), "ok");
  }
  CompositeOptions opt;
  opt.standardize = cfg.composite.standardize;
  std::vector<std::string> skipped;
  const auto models = fit_all_parameters(data, opt, &skipped);
  for (const auto& s : skipped) {
    ctx.diag.warn("composite: " + s);
    ctx.record(s.substr(0, s.find(':')), "skipped", s);
  }
  if (models.empty()) throw InputError("composite: no reef parameter could be fitted");
  fs::create_directories(cfg.out_dir);
  const fs::path path = cfg.out_dir / fmt::format("composite_{}.csv", to_string(cfg.composite.mode));
  write_composite_csv(path, models);
  for (const auto& m : models) {
    ctx.out << fmt::format("{:<20} a={:<10.4g} b={:<10.4g} c={:<10.4g} d={:<10.4g} R={} p={}\n", m.reef_parameter,
                           m.coef[0], m.coef[1], m.coef[2], m.coef[3], m.R ? fmt::format("{:.3f}", *m.R) : "undef",
                           m.p_value ? fmt::format("{:.3g}", *m.p_value) : "undef");
  }
  return finish(ctx);
}

int cmd_report(Context& ctx) {
  const auto& cfg = ctx.cfg;
  ReportSpec spec;
  spec.index_csv = cfg.report.indices;
  spec.roc_csv = cfg.report.roc;
  spec.correlation_csv = cfg.report.correlation;
  spec.out_dir = cfg.out_dir;
  spec.kinds = cfg.report.kinds;
  spec.format = cfg.report.format;
  spec.dpi = cfg.report.dpi;
  spec.diel_bin_minutes = cfg.report.diel_bin_minutes;
  spec.workers = cfg.workers;
  if (!spec.index_csv && !spec.roc_csv && !spec.correlation_csv) {
    throw InputError("report: no inputs (set report.indices, report.roc or report.correlation)");
  }
  const ReportOutput res = render(spec);
  for (const auto& f : res.files) ctx.record(f.string(), "ok");
  for (const auto& f : res.failed) ctx.record(f.substr(0, f.find(' ')), "skipped", f);
  ctx.out << fmt::format("report: {} file(s) written to {}\n", res.files.size(), cfg.out_dir.string());
  return finish(ctx);
}

template <typename T>
struct Flag {
  T value{};
  CLI::Option* opt = nullptr;
  bool given() const { return opt && opt->count() > 0; }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Passive acoustic reef monitoring pipeline", "reefpam"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  Flag<std::string> config_path, out_dir;
  Flag<std::uint64_t> seed;
  Flag<unsigned> workers;
  config_path.opt = app.add_option("--config", config_path.value,
                                   fmt::format("JSON config (default: ${})", kConfigEnv));
  seed.opt = app.add_option("--seed", seed.value, "random seed");
  workers.opt = app.add_option("--workers", workers.value, "worker threads")->check(CLI::PositiveNumber);
  out_dir.opt = app.add_option("--out-dir", out_dir.value, "output directory");

  auto* ingest = app.add_subcommand("ingest", "validate a recording manifest");
  Flag<std::string> ingest_manifest;
  ingest_manifest.opt = ingest->add_option("--manifest", ingest_manifest.value, "recording manifest CSV");

  auto* indices = app.add_subcommand("indices", "compute SPL, ACI and snap rate per segment");
  Flag<std::string> idx_manifest, idx_output;
  Flag<std::vector<std::string>> idx_inputs;
  Flag<double> idx_segment;
  Flag<bool> idx_denoised;
  idx_manifest.opt = indices->add_option("--manifest", idx_manifest.value, "recording manifest CSV");
  idx_inputs.opt = indices->add_option("inputs", idx_inputs.value, "WAV files named <site>_<YYYYMMDD>T<HHMMSS>Z.wav");
  idx_segment.opt = indices->add_option("--segment-s", idx_segment.value, "analysis segment length");
  idx_output.opt = indices->add_option("--output", idx_output.value, "index CSV name inside --out-dir");
  idx_denoised.opt = indices->add_flag("--denoised", idx_denoised.value, "mark rows as denoised");

  auto* mix = app.add_subcommand("mix", "synthesize noisy/clean training pairs");
  Flag<std::string> mix_signals, mix_noise, mix_split;
  Flag<std::size_t> mix_count;
  Flag<double> mix_snr, mix_segment, mix_rate;
  Flag<bool> mix_loop, mix_overwrite;
  mix_signals.opt = mix->add_option("--signals", mix_signals.value, "signal bank CSV");
  mix_noise.opt = mix->add_option("--noise", mix_noise.value, "noise bank CSV");
  mix_split.opt = mix->add_option("--split", mix_split.value, "train, validation or test");
  mix_count.opt = mix->add_option("--count", mix_count.value, "number of pairs");
  mix_snr.opt = mix->add_option("--snr-db", mix_snr.value, "target SNR");
  mix_segment.opt = mix->add_option("--segment-s", mix_segment.value, "pair length");
  mix_rate.opt = mix->add_option("--sample-rate", mix_rate.value, "output rate (0: first signal's)");
  mix_loop.opt = mix->add_flag("--loop-noise", mix_loop.value, "loop noise shorter than the segment");
  mix_overwrite.opt = mix->add_flag("--overwrite", mix_overwrite.value, "replace existing outputs");

  auto* deval = app.add_subcommand("denoise-eval", "ROC evaluation of a denoiser");
  Flag<std::string> ev_manifest, ev_denoiser;
  Flag<std::vector<double>> ev_snr;
  Flag<bool> ev_per_clip;
  ev_manifest.opt = deval->add_option("--manifest", ev_manifest.value, "pair manifest CSV");
  ev_denoiser.opt = deval->add_option("--denoiser", ev_denoiser.value, "gate, identity, dir:<path> or exe:<path>");
  ev_snr.opt = deval->add_option("--snr", ev_snr.value, "SNR grid values");
  ev_per_clip.opt = deval->add_flag("--per-clip", ev_per_clip.value, "also write per-clip curves");

  auto* corr = app.add_subcommand("correlate", "correlate indices with transect parameters");
  Flag<std::string> co_indices, co_transects, co_mode, co_param;
  Flag<bool> co_windowed, co_denoised;
  co_indices.opt = corr->add_option("--indices", co_indices.value, "index CSV");
  co_transects.opt = corr->add_option("--transects", co_transects.value, "transect CSV");
  co_mode.opt = corr->add_option("--mode", co_mode.value, "temporal, spatial or per_site_cyclic");
  co_param.opt = corr->add_option("--cyclic-parameter", co_param.value, "parameter for per_site_cyclic");
  co_windowed.opt = corr->add_flag("--windowed-mean", co_windowed.value, "average within survey intervals");
  co_denoised.opt = corr->add_flag("--denoised", co_denoised.value, "use denoised series");

  auto* comp = app.add_subcommand("composite", "fit the composite acoustic index");
  Flag<std::string> cp_indices, cp_transects, cp_design, cp_mode;
  Flag<bool> cp_standardize, cp_denoised;
  cp_indices.opt = comp->add_option("--indices", cp_indices.value, "index CSV");
  cp_transects.opt = comp->add_option("--transects", cp_transects.value, "transect CSV");
  cp_design.opt = comp->add_option("--design", cp_design.value, "design CSV (snap_rate, spl, aci, targets)");
  cp_mode.opt = comp->add_option("--mode", cp_mode.value, "temporal or spatial");
  cp_standardize.opt = comp->add_flag("--standardize", cp_standardize.value, "z-score the indices first");
  cp_denoised.opt = comp->add_flag("--denoised", cp_denoised.value, "use denoised series");

  auto* rep = app.add_subcommand("report", "render figures and their CSVs");
  Flag<std::string> rp_indices, rp_roc, rp_corr, rp_format;
  Flag<std::vector<std::string>> rp_kinds;
  Flag<double> rp_dpi;
  rp_indices.opt = rep->add_option("--indices", rp_indices.value, "index CSV");
  rp_roc.opt = rep->add_option("--roc", rp_roc.value, "ROC CSV");
  rp_corr.opt = rep->add_option("--correlation", rp_corr.value, "correlation CSV");
  rp_kinds.opt = rep->add_option("--kind", rp_kinds.value, "diel, heatmap, monthly, roc, correlation");
  rp_format.opt = rep->add_option("--format", rp_format.value, "svg or png");
  rp_dpi.opt = rep->add_option("--dpi", rp_dpi.value, "PNG resolution");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kFatal;
  }

  try {
    RunConfig cfg;
    std::optional<fs::path> cfg_file;
    if (config_path.given()) cfg_file = config_path.value;
    else if (const char* env = std::getenv(kConfigEnv); env && *env) cfg_file = env;
    if (cfg_file) cfg = load_config(*cfg_file);

    if (seed.given()) cfg.seed = seed.value;
    if (workers.given()) cfg.workers = workers.value;
    if (out_dir.given()) cfg.out_dir = out_dir.value;

    if (ingest_manifest.given()) cfg.ingest.manifest = fs::path(ingest_manifest.value);

    if (idx_manifest.given()) cfg.indices.manifest = fs::path(idx_manifest.value);
    if (idx_inputs.given()) {
      cfg.indices.inputs.assign(idx_inputs.value.begin(), idx_inputs.value.end());
      if (!idx_manifest.given()) cfg.indices.manifest.reset();
    }
    if (idx_segment.given()) cfg.segment_s = idx_segment.value;
    if (idx_output.given()) cfg.indices.output = idx_output.value;
    if (idx_denoised.given()) cfg.indices.denoised = idx_denoised.value;

    if (mix_signals.given()) cfg.mix.signals = fs::path(mix_signals.value);
    if (mix_noise.given()) cfg.mix.noise = fs::path(mix_noise.value);
    if (mix_split.given()) cfg.mix.split = parse_split(mix_split.value);
    if (mix_count.given()) cfg.mix.count = mix_count.value;
    if (mix_snr.given()) cfg.mix.recipe.snr_db = mix_snr.value;
    if (mix_segment.given()) cfg.mix.recipe.segment_len_s = mix_segment.value;
    if (mix_rate.given()) cfg.mix.recipe.sample_rate = mix_rate.value;
    if (mix_loop.given()) cfg.mix.recipe.loop_short_noise = mix_loop.value;
    if (mix_overwrite.given()) cfg.mix.overwrite = mix_overwrite.value;

    if (ev_manifest.given()) cfg.eval.manifest = fs::path(ev_manifest.value);
    if (ev_denoiser.given()) cfg.eval.denoiser = ev_denoiser.value;
    if (ev_snr.given()) cfg.eval.snr_grid = ev_snr.value;
    if (ev_per_clip.given()) cfg.eval.per_clip = ev_per_clip.value;

    if (co_indices.given()) cfg.correlate.indices = fs::path(co_indices.value);
    if (co_transects.given()) cfg.correlate.transects = fs::path(co_transects.value);
    if (co_mode.given()) cfg.correlate.mode = parse_correlation_mode(co_mode.value);
    if (co_param.given()) cfg.correlate.cyclic_parameter = parse_reef_parameter(co_param.value);
    if (co_windowed.given()) cfg.correlate.windowed_mean = co_windowed.value;
    if (co_denoised.given()) cfg.correlate.denoised = co_denoised.value;

    if (cp_indices.given()) cfg.composite.indices = fs::path(cp_indices.value);
    if (cp_transects.given()) cfg.composite.transects = fs::path(cp_transects.value);
    if (cp_design.given()) cfg.composite.design = fs::path(cp_design.value);
    if (cp_mode.given()) cfg.composite.mode = parse_correlation_mode(cp_mode.value);
    if (cp_standardize.given()) cfg.composite.standardize = cp_standardize.value;
    if (cp_denoised.given()) cfg.composite.denoised = cp_denoised.value;

    if (rp_indices.given()) cfg.report.indices = fs::path(rp_indices.value);
    if (rp_roc.given()) cfg.report.roc = fs::path(rp_roc.value);
    if (rp_corr.given()) cfg.report.correlation = fs::path(rp_corr.value);
    if (rp_kinds.given()) {
      cfg.report.kinds.clear();
      for (const auto& k : rp_kinds.value) cfg.report.kinds.push_back(parse_figure_kind(k));
    }
    if (rp_format.given()) cfg.report.format = parse_image_format(rp_format.value);
    if (rp_dpi.given()) cfg.report.dpi = rp_dpi.value;

    cfg.validate();

    const std::string name = app.get_subcommands().front()->get_name();
    Context ctx{cfg, out, err, name, {}, {}, false};
    if (name == "ingest") return cmd_ingest(ctx);
    if (name == "indices") return cmd_indices(ctx);
    if (name == "mix") return cmd_mix(ctx);
    if (name == "denoise-eval") return cmd_denoise_eval(ctx);
    if (name == "correlate") return cmd_correlate(ctx);
    if (name == "composite") return cmd_composite(ctx);
    if (name == "report") return cmd_report(ctx);
    err << "unknown subcommand " << name << "\n";
    return kFatal;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFatal;
  }
}

}  // namespace reef::cli
