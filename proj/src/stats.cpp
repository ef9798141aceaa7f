#include "reef/stats.hpp"

#include "reef/common.hpp"
#include "reef/csv.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace reef {

namespace fs = std::filesystem;
using std::chrono::sys_days;

namespace {

// Lanczos approximation, g = 7, valid for x > 0.
double log_gamma(double x) {
  static constexpr double c[9] = {0.99999999999980993,  676.5203681218851,
                                  -1259.1392167224028,  771.32342877765313,
                                  -176.61502916214059,  12.507343278686905,
                                  -0.13857109526572012, 9.9843695780195716e-6,
                                  1.5056327351493116e-7};
  if (x < 0.5) {
    return std::log(std::numbers::pi / std::abs(std::sin(std::numbers::pi * x))) -
           log_gamma(1.0 - x);
  }
  x -= 1.0;
  double a = c[0];
  const double t = x + 7.5;
  for (int i = 1; i < 9; ++i) a += c[i] / (x + i);
  return 0.5 * std::log(2.0 * std::numbers::pi) + (x + 0.5) * std::log(t) - t + std::log(a);
}

// Continued fraction for the incomplete beta (modified Lentz).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw InvalidArgument("incomplete_beta: a, b must be > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("incomplete_beta: x must be in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = log_gamma(a + b) - log_gamma(a) - log_gamma(b) + a * std::log(x) +
                          b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_tailed_p(double t, double df) {
  if (!(df > 0.0)) throw InvalidArgument("student_t_two_tailed_p: df must be > 0");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  return std::clamp(incomplete_beta(df / 2.0, 0.5, df / (df + t * t)), 0.0, 1.0);
}

double f_upper_p(double f, double d1, double d2) {
  if (!(d1 > 0.0 && d2 > 0.0)) throw InvalidArgument("f_upper_p: degrees of freedom must be > 0");
  if (std::isnan(f)) return std::numeric_limits<double>::quiet_NaN();
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return std::clamp(incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f)), 0.0, 1.0);
}

Tier significance_tier(double p) {
  if (p < 0.001) return Tier::p001;
  if (p < 0.01) return Tier::p01;
  if (p < 0.05) return Tier::p05;
  return Tier::ns;
}

std::string to_string(Tier tier) {
  switch (tier) {
    case Tier::ns: return "ns";
    case Tier::p05: return "*";
    case Tier::p01: return "**";
    case Tier::p001: return "***";
  }
  return "?";
}

CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw InvalidArgument(fmt::format("pearson: lengths {} and {} differ", x.size(), y.size()));
  }
  CorrelationResult res;
  res.n = x.size();
  if (res.n < 3) return res;
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
  };
  if (constant(x) || constant(y)) return res;
  const double n = static_cast<double>(res.n);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < res.n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < res.n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  res.r = r;
  const double df = n - 2.0;
  if (std::abs(r) == 1.0) {
    res.t = std::copysign(std::numeric_limits<double>::infinity(), r);
    res.p_value = 0.0;
  } else {
    res.t = r * std::sqrt(df / (1.0 - r * r));
    res.p_value = student_t_two_tailed_p(*res.t, df);
  }
  res.tier = significance_tier(*res.p_value);
  return res;
}

std::string to_string(ReefParameter p) {
  switch (p) {
    case ReefParameter::live_coral_richness: return "live_coral_richness";
    case ReefParameter::live_coral_size: return "live_coral_size";
    case ReefParameter::live_coral_cover: return "live_coral_cover";
    case ReefParameter::dead_coral_cover: return "dead_coral_cover";
    case ReefParameter::invertebrate_cover: return "invertebrate_cover";
    case ReefParameter::algal_cover: return "algal_cover";
    case ReefParameter::macroalgal_cover: return "macroalgal_cover";
  }
  return "?";
}

ReefParameter parse_reef_parameter(const std::string& text) {
  for (auto p : kAllReefParameters) {
    if (to_string(p) == text) return p;
  }
  throw InvalidArgument(fmt::format("unknown reef parameter '{}'", text));
}

bool is_percentage(ReefParameter p) {
  return p != ReefParameter::live_coral_richness && p != ReefParameter::live_coral_size;
}

void TransectRecord::validate() const {
  for (auto p : kAllReefParameters) {
    const double v = get(p);
    if (!std::isfinite(v) || v < 0.0 || (is_percentage(p) && v > 100.0)) {
      throw InvalidArgument(fmt::format("transect {} {}: {} = {} out of range", site_id,
                                        format_date(survey_date), to_string(p), v));
    }
  }
  if (get(ReefParameter::macroalgal_cover) > get(ReefParameter::algal_cover)) {
    throw InvalidArgument(fmt::format("transect {} {}: macroalgal cover {} exceeds algal cover {}",
                                      site_id, format_date(survey_date),
                                      get(ReefParameter::macroalgal_cover),
                                      get(ReefParameter::algal_cover)));
  }
}

std::vector<TransectRecord> read_transect_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  std::vector<std::string> cols = {"site_id", "survey_date"};
  for (auto p : kAllReefParameters) cols.push_back(to_string(p));
  t.require_columns(cols);
  std::vector<TransectRecord> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    TransectRecord rec;
    rec.site_id = row[t.column("site_id")];
    const auto when = parse_iso8601(row[t.column("survey_date")]);
    if (!when) {
      throw InputError(fmt::format("{} row {}: bad survey_date '{}'", path.string(), r + 2,
                                   row[t.column("survey_date")]));
    }
    rec.survey_date = day_of(*when);
    for (auto p : kAllReefParameters) rec.get(p) = parse_double(row[t.column(to_string(p))]);
    try {
      rec.validate();
    } catch (const InvalidArgument& e) {
      throw InputError(fmt::format("{} row {}: {}", path.string(), r + 2, e.what()));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void write_transect_csv(const fs::path& path, const std::vector<TransectRecord>& records) {
  CsvTable t;
  t.header = {"site_id", "survey_date"};
  for (auto p : kAllReefParameters) t.header.push_back(to_string(p));
  for (const auto& r : records) {
    std::vector<std::string> row = {r.site_id, format_date(r.survey_date)};
    for (double v : r.values) row.push_back(format_double(v));
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

std::vector<TransectRecord> site_records(const std::vector<TransectRecord>& records,
                                         const std::string& site_id) {
  std::vector<TransectRecord> out;
  for (const auto& r : records) {
    if (r.site_id == site_id) out.push_back(r);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.survey_date < b.survey_date;
  });
  return out;
}

namespace {

void check_site(const std::vector<TransectRecord>& site) {
  for (std::size_t i = 0; i < site.size(); ++i) {
    if (site[i].site_id != site.front().site_id) {
      throw InvalidArgument("interpolate_transect: records from more than one site");
    }
    if (i > 0 && !(site[i - 1].survey_date < site[i].survey_date)) {
      throw InvalidArgument(fmt::format(
          "interpolate_transect: surveys must be sorted with distinct dates (site {}, {})",
          site[i].site_id, format_date(site[i].survey_date)));
    }
  }
}

}  // namespace

std::array<std::optional<double>, kReefParameterCount> interpolate_transect(
    const std::vector<TransectRecord>& site, Timestamp at) {
  check_site(site);
  std::array<std::optional<double>, kReefParameterCount> out{};
  if (site.empty()) return out;
  const Timestamp first = site.front().survey_date;
  const Timestamp last = site.back().survey_date;
  if (at < first || at > last) return out;
  std::size_t k = 0;
  while (k + 1 < site.size() && Timestamp(site[k + 1].survey_date) <= at) ++k;
  if (Timestamp(site[k].survey_date) == at || k + 1 == site.size()) {
    for (std::size_t i = 0; i < kReefParameterCount; ++i) out[i] = site[k].values[i];
    return out;
  }
  const double span = days_between(site[k].survey_date, site[k + 1].survey_date);
  const double w = days_between(site[k].survey_date, at) / span;
  for (std::size_t i = 0; i < kReefParameterCount; ++i) {
    const double a = site[k].values[i], b = site[k + 1].values[i];
    out[i] = a + w * (b - a);
  }
  return out;
}

std::optional<double> interpolate_transect(const std::vector<TransectRecord>& site,
                                           ReefParameter p, Timestamp at) {
  return interpolate_transect(site, at)[static_cast<std::size_t>(p)];
}

double CyclicFit::evaluate(double day) const {
  return A * std::cos(2.0 * std::numbers::pi * (day - phi.value_or(0.0)) / kCyclicPeriodDays) + B;
}

CyclicFit fit_cyclic(std::span<const CyclicObservation> obs) {
  if (obs.size() < 3) {
    throw InvalidArgument(fmt::format("fit_cyclic: {} observations, need at least 3", obs.size()));
  }
  double lo = obs.front().day, hi = obs.front().day;
  for (const auto& o : obs) {
    if (!std::isfinite(o.day) || !std::isfinite(o.cover)) {
      throw InvalidArgument("fit_cyclic: non-finite observation");
    }
    lo = std::min(lo, o.day);
    hi = std::max(hi, o.day);
  }
  if (hi - lo < kCyclicMinSpanDays) {
    throw InvalidArgument(fmt::format(
        "fit_cyclic: observations span {:.1f} days, need at least {:.0f}", hi - lo,
        kCyclicMinSpanDays));
  }
  const auto n = static_cast<Eigen::Index>(obs.size());
  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = 2.0 * std::numbers::pi * obs[static_cast<std::size_t>(i)].day / kCyclicPeriodDays;
    X(i, 0) = std::cos(w);
    X(i, 1) = std::sin(w);
    X(i, 2) = 1.0;
    y(i) = obs[static_cast<std::size_t>(i)].cover;
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < 3) throw InvalidArgument("fit_cyclic: phase not identifiable from these days");
  const Eigen::VectorXd beta = qr.solve(y);
  CyclicFit fit;
  fit.n = obs.size();
  fit.B = beta(2);
  fit.A = std::hypot(beta(0), beta(1));
  const double scale = std::max({1.0, std::abs(fit.B), y.cwiseAbs().maxCoeff()});
  if (fit.A <= 1e-12 * scale) {
    fit.A = 0.0;
  } else {
    double phi = std::atan2(beta(1), beta(0)) * kCyclicPeriodDays / (2.0 * std::numbers::pi);
    phi = std::fmod(phi, kCyclicPeriodDays);
    if (phi < 0.0) phi += kCyclicPeriodDays;
    if (phi >= kCyclicPeriodDays) phi = 0.0;
    fit.phi = phi;
  }
  double ss = 0.0;
  for (const auto& o : obs) ss += std::pow(o.cover - fit.evaluate(o.day), 2);
  fit.residual_rms = std::sqrt(ss / static_cast<double>(obs.size()));
  return fit;
}

double month_midpoint_day(unsigned month) {
  static constexpr std::array<int, 12> len = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month < 1 || month > 12) throw InvalidArgument(fmt::format("month {} out of range", month));
  double start = 0.0;
  for (unsigned m = 1; m < month; ++m) start += len[m - 1];
  return start + len[month - 1] / 2.0;
}

std::string to_string(CorrelationMode mode) {
  switch (mode) {
    case CorrelationMode::temporal: return "temporal";
    case CorrelationMode::spatial: return "spatial";
    case CorrelationMode::per_site_cyclic: return "per_site_cyclic";
  }
  return "?";
}

CorrelationMode parse_correlation_mode(const std::string& text) {
  if (text == "temporal") return CorrelationMode::temporal;
  if (text == "spatial") return CorrelationMode::spatial;
  if (text == "per_site_cyclic" || text == "per-site-cyclic") return CorrelationMode::per_site_cyclic;
  throw InvalidArgument(fmt::format("unknown correlation mode '{}'", text));
}

namespace {

// Series keyed by site; one series per site for the given kind.
std::map<std::string, const IndexSeries*> by_site(const std::vector<IndexSeries>& series,
                                                  std::optional<IndexKind> kind) {
  std::map<std::string, const IndexSeries*> out;
  for (const auto& s : series) {
    if (kind && s.kind != *kind) continue;
    if (!out.emplace(s.site_id, &s).second) {
      throw InvalidArgument(fmt::format("more than one {} series for site {}", to_string(s.kind),
                                        s.site_id));
    }
  }
  return out;
}

IndexKind single_kind(const std::vector<IndexSeries>& series) {
  if (series.empty()) throw InvalidArgument("correlate_index: no series");
  for (const auto& s : series) {
    if (s.kind != series.front().kind) {
      throw InvalidArgument("correlate_index: series of more than one index kind");
    }
  }
  return series.front().kind;
}

}  // namespace

std::vector<CorrelationRow> correlate_index(const std::vector<IndexSeries>& series,
                                            const std::vector<TransectRecord>& records,
                                            const CorrelateOptions& options) {
  const IndexKind kind = single_kind(series);
  const auto sites = by_site(series, kind);
  std::vector<CorrelationRow> out;

  if (options.mode == CorrelationMode::per_site_cyclic) {
    const ReefParameter param = options.cyclic_parameter;
    for (const auto& [site, s] : sites) {
      CorrelationRow row{kind, param, options.mode, site, {}, std::nullopt};
      const auto recs = site_records(records, site);
      std::vector<CyclicObservation> obs;
      for (const auto& r : recs) {
        obs.push_back({static_cast<double>(day_of_year(r.survey_date)), r.get(param)});
      }
      try {
        row.fit = fit_cyclic(obs);
      } catch (const InvalidArgument& e) {
        warn(nullptr, fmt::format("site {}: no cyclic fit ({})", site, e.what()));
        out.push_back(std::move(row));
        continue;
      }
      std::map<unsigned, std::vector<double>> months;
      for (const auto& p : s->points) months[month_of(day_of(p.time))].push_back(p.value);
      std::vector<double> x, y;
      for (const auto& [m, values] : months) {
        x.push_back(mean_index_value(values, kind));
        y.push_back(row.fit->evaluate(month_midpoint_day(m)));
      }
      row.result = pearson(x, y);
      out.push_back(std::move(row));
    }
    return out;
  }

  for (auto param : kAllReefParameters) {
    std::vector<double> x, y;
    if (options.mode == CorrelationMode::spatial) {
      for (const auto& [site, s] : sites) {
        const auto recs = site_records(records, site);
        if (recs.empty() || s->points.empty()) continue;
        std::vector<double> values;
        for (const auto& p : s->points) values.push_back(p.value);
        double pm = 0.0;
        for (const auto& r : recs) pm += r.get(param);
        x.push_back(mean_index_value(values, kind));
        y.push_back(pm / static_cast<double>(recs.size()));
      }
    } else {
      for (const auto& [site, s] : sites) {
        const auto recs = site_records(records, site);
        if (recs.empty()) continue;
        const auto daily = daily_means(*s);
        if (!options.windowed_mean) {
          for (const auto& d : daily) {
            const auto v = interpolate_transect(recs, param, d.date);
            if (!v) continue;
            x.push_back(d.value);
            y.push_back(*v);
          }
          continue;
        }
        // one pair per survey interval [d_k, d_k+1), the last interval closed
        for (std::size_t k = 0; k + 1 < recs.size(); ++k) {
          const bool last = k + 2 == recs.size();
          std::vector<double> xi;
          double yi = 0.0;
          for (const auto& d : daily) {
            if (d.date < recs[k].survey_date) continue;
            if (d.date > recs[k + 1].survey_date || (!last && d.date == recs[k + 1].survey_date)) {
              continue;
            }
            xi.push_back(d.value);
            yi += *interpolate_transect(recs, param, d.date);
          }
          if (xi.empty()) continue;
          x.push_back(mean_index_value(xi, kind));
          y.push_back(yi / static_cast<double>(xi.size()));
        }
      }
    }
    out.push_back({kind, param, options.mode, "", pearson(x, y), std::nullopt});
  }
  return out;
}

namespace {

std::string opt_field(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::optional<double> opt_parse(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_double(s);
}

}  // namespace

std::string correlation_csv_text(const std::vector<CorrelationRow>& rows) {
  CsvTable t;
  t.header = {"index_kind", "reef_parameter", "mode",  "site_id", "n",     "r",
              "t",          "p_value",        "tier",  "fit_A",   "fit_B", "fit_phi"};
  for (const auto& r : rows) {
    const auto& c = r.result;
    t.rows.push_back({to_string(r.index), to_string(r.parameter), to_string(r.mode), r.site_id,
                      std::to_string(c.n), opt_field(c.r), opt_field(c.t), opt_field(c.p_value),
                      c.defined() ? to_string(c.tier) : "",
                      r.fit ? format_double(r.fit->A) : "", r.fit ? format_double(r.fit->B) : "",
                      r.fit ? opt_field(r.fit->phi) : ""});
  }
  return to_csv(t);
}

void write_correlation_csv(const fs::path& path, const std::vector<CorrelationRow>& rows) {
  write_file_atomic(path, correlation_csv_text(rows));
}

std::vector<CorrelationCsvRow> read_correlation_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  t.require_columns({"index_kind", "reef_parameter", "mode", "site_id", "r", "p_value", "tier"});
  std::vector<CorrelationCsvRow> out;
  auto get = [&](const std::vector<std::string>& row, const char* name) -> std::string {
    return t.has_column(name) ? row[t.column(name)] : std::string();
  };
  for (const auto& row : t.rows) {
    CorrelationCsvRow r;
    r.index_kind = get(row, "index_kind");
    r.reef_parameter = get(row, "reef_parameter");
    r.mode = get(row, "mode");
    r.site_id = get(row, "site_id");
    r.r = opt_parse(get(row, "r"));
    r.p_value = opt_parse(get(row, "p_value"));
    r.tier = get(row, "tier");
    r.fit_A = opt_parse(get(row, "fit_A"));
    r.fit_B = opt_parse(get(row, "fit_B"));
    r.fit_phi = opt_parse(get(row, "fit_phi"));
    out.push_back(std::move(r));
  }
  return out;
}

double CompositeModel::predict(double snap_rate, double spl, double aci) const {
  const std::array<double, 3> v = {snap_rate, spl, aci};
  double y = coef[3];
  for (std::size_t j = 0; j < 3; ++j) y += coef[j] * (v[j] - column_mean[j]) / column_scale[j];
  return y;
}

CompositeModel fit_composite(const Eigen::MatrixXd& design, const Eigen::VectorXd& target,
                             const CompositeOptions& options) {
  const Eigen::Index n = design.rows();
  if (design.cols() != 3) {
    throw InvalidArgument(fmt::format("fit_composite: design has {} columns, expected 3", design.cols()));
  }
  if (target.size() != n) throw InvalidArgument("fit_composite: target length differs from design rows");
  if (n < 5) throw InvalidArgument(fmt::format("fit_composite: {} rows, need at least 5", n));
  if (!design.allFinite() || !target.allFinite()) {
    throw InvalidArgument("fit_composite: non-finite values in design or target");
  }

  CompositeModel m;
  m.n = static_cast<std::size_t>(n);
  m.standardized = options.standardize;
  Eigen::MatrixXd X(n, 4);
  for (Eigen::Index j = 0; j < 3; ++j) {
    const auto col = design.col(j);
    if (options.standardize) {
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(n - 1));
      m.column_mean[static_cast<std::size_t>(j)] = mean;
      m.column_scale[static_cast<std::size_t>(j)] = sd > 0.0 ? sd : 1.0;
    }
    X.col(j) = (col.array() - m.column_mean[static_cast<std::size_t>(j)]) /
               m.column_scale[static_cast<std::size_t>(j)];
  }
  X.col(3).setOnes();

  Eigen::MatrixXd scaled = X;
  for (Eigen::Index j = 0; j < 4; ++j) {
    const double norm = scaled.col(j).norm();
    if (norm > 0.0) scaled.col(j) /= norm;
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled);
  const auto& sv = svd.singularValues();
  const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1)
                                              : std::numeric_limits<double>::infinity();
  if (!(cond <= options.condition_limit)) {
    throw InvalidArgument(fmt::format(
        "fit_composite: design is rank-deficient (scaled condition number {:.3g} > {:.0e})", cond,
        options.condition_limit));
  }

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  const Eigen::VectorXd beta = qr.solve(target);
  m.fitted = X * beta;
  m.residuals = target - m.fitted;
  const double df = static_cast<double>(n - 4);
  const double sse = m.residuals.squaredNorm();
  const double sigma2 = sse / df;
  const Eigen::MatrixXd cov = (X.transpose() * X).inverse() * sigma2;
  for (std::size_t j = 0; j < 4; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    m.coef[j] = beta(jj);
    const double se = std::sqrt(std::max(cov(jj, jj), 0.0));
    if (se > 0.0) {
      m.p[j] = student_t_two_tailed_p(beta(jj) / se, df);
    } else {
      m.p[j] = beta(jj) == 0.0 ? 1.0 : 0.0;
    }
    m.significant[j] = m.p[j] < options.alpha;
  }

  std::vector<double> f(m.fitted.data(), m.fitted.data() + n);
  std::vector<double> y(target.data(), target.data() + n);
  const auto corr = pearson(f, y);
  m.R = corr.r;
  const double sst = (target.array() - target.mean()).square().sum();
  if (sst > 0.0) {
    const double ssr = std::max(sst - sse, 0.0);
    m.p_value = sse > 0.0 ? f_upper_p((ssr / 3.0) / (sse / df), 3.0, df) : 0.0;
  }
  return m;
}

CompositeData build_composite_data(const std::vector<IndexSeries>& series,
                                   const std::vector<TransectRecord>& records,
                                   CorrelationMode mode, IndexKind spl_kind) {
  if (mode == CorrelationMode::per_site_cyclic) {
    throw InvalidArgument("composite regression supports temporal and spatial modes");
  }
  const auto snap = by_site(series, IndexKind::snap_rate);
  const auto spl = by_site(series, spl_kind);
  const auto aci = by_site(series, IndexKind::aci_low);
  struct Row {
    std::array<double, 3> x;
    std::string site;
    std::optional<sys_days> date;
    std::array<std::optional<double>, kReefParameterCount> t;
  };
  std::vector<Row> rows;
  for (const auto& [site, s_snap] : snap) {
    if (!spl.count(site) || !aci.count(site)) continue;
    const auto recs = site_records(records, site);
    if (recs.empty()) continue;
    const std::array<const IndexSeries*, 3> ss = {s_snap, spl.at(site), aci.at(site)};
    if (mode == CorrelationMode::spatial) {
      Row r;
      r.site = site;
      bool ok = true;
      for (std::size_t j = 0; j < 3; ++j) {
        std::vector<double> v;
        for (const auto& p : ss[j]->points) v.push_back(p.value);
        if (v.empty()) ok = false;
        else r.x[j] = mean_index_value(v, ss[j]->kind);
      }
      if (!ok) continue;
      for (std::size_t i = 0; i < kReefParameterCount; ++i) {
        double acc = 0.0;
        for (const auto& rec : recs) acc += rec.values[i];
        r.t[i] = acc / static_cast<double>(recs.size());
      }
      rows.push_back(r);
      continue;
    }
    std::array<std::map<sys_days, double>, 3> daily;
    for (std::size_t j = 0; j < 3; ++j) {
      for (const auto& d : daily_means(*ss[j])) daily[j][d.date] = d.value;
    }
    for (const auto& [date, v0] : daily[0]) {
      if (!daily[1].count(date) || !daily[2].count(date)) continue;
      const auto t = interpolate_transect(recs, date);
      if (!t[0]) continue;
      rows.push_back({{v0, daily[1].at(date), daily[2].at(date)}, site, date, t});
    }
  }
  CompositeData data;
  data.design.resize(static_cast<Eigen::Index>(rows.size()), 3);
  for (auto& t : data.targets) t.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      data.design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].x[j];
    }
    data.site_ids.push_back(rows[i].site);
    data.dates.push_back(rows[i].date);
    for (std::size_t k = 0; k < kReefParameterCount; ++k) data.targets[k][i] = rows[i].t[k];
  }
  return data;
}

CompositeData read_design_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  t.require_columns({"snap_rate", "spl", "aci"});
  std::vector<std::pair<std::size_t, std::size_t>> target_cols;  // (csv column, parameter)
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    const auto& name = t.header[c];
    if (name == "snap_rate" || name == "spl" || name == "aci" || name == "site_id" || name == "date") {
      continue;
    }
    try {
      target_cols.emplace_back(c, static_cast<std::size_t>(parse_reef_parameter(name)));
    } catch (const InvalidArgument&) {
      throw InputError(fmt::format("{}: unknown design column '{}'", path.string(), name));
    }
  }
  CompositeData data;
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  data.design.resize(n, 3);
  for (auto& v : data.targets) v.resize(t.rows.size());
  const std::array<std::size_t, 3> xc = {t.column("snap_rate"), t.column("spl"), t.column("aci")};
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    for (std::size_t j = 0; j < 3; ++j) {
      const double v = parse_double(row[xc[j]]);
      if (!std::isfinite(v)) {
        throw InputError(fmt::format("{} row {}: missing {}", path.string(), i + 2, t.header[xc[j]]));
      }
      data.design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
    data.site_ids.push_back(t.has_column("site_id") ? row[t.column("site_id")] : "");
    std::optional<sys_days> date;
    if (t.has_column("date")) {
      if (auto ts = parse_iso8601(row[t.column("date")])) date = day_of(*ts);
    }
    data.dates.push_back(date);
    for (const auto& [c, k] : target_cols) {
      const double v = parse_double(row[c]);
      if (std::isfinite(v)) data.targets[k][i] = v;
    }
  }
  return data;
}

std::vector<CompositeModel> fit_all_parameters(const CompositeData& data,
                                               const CompositeOptions& options,
                                               std::vector<std::string>* skipped) {
  std::vector<CompositeModel> out;
  for (auto param : kAllReefParameters) {
    const auto& t = data.targets[static_cast<std::size_t>(param)];
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i]) rows.push_back(static_cast<Eigen::Index>(i));
    }
    if (rows.empty()) continue;
    if (rows.size() < 5) {
      if (skipped) skipped->push_back(fmt::format("{}: {} rows, need 5", to_string(param), rows.size()));
      continue;
    }
    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), 3);
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      X.row(static_cast<Eigen::Index>(r)) = data.design.row(rows[r]);
      y(static_cast<Eigen::Index>(r)) = *t[static_cast<std::size_t>(rows[r])];
    }
    try {
      CompositeModel m = fit_composite(X, y, options);
      m.reef_parameter = to_string(param);
      out.push_back(std::move(m));
    } catch (const InvalidArgument& e) {
      if (skipped) skipped->push_back(fmt::format("{}: {}", to_string(param), e.what()));
    }
  }
  return out;
}

std::string composite_csv_text(const std::vector<CompositeModel>& models) {
  CsvTable t;
  t.header = {"reef_parameter", "a_i", "b_i", "c_i", "d_i", "p_a", "p_b", "p_c", "p_d", "R", "p"};
  for (const auto& m : models) {
    std::vector<std::string> row = {m.reef_parameter};
    for (double c : m.coef) row.push_back(format_double(c));
    for (double p : m.p) row.push_back(format_double(p));
    row.push_back(opt_field(m.R));
    row.push_back(opt_field(m.p_value));
    t.rows.push_back(std::move(row));
  }
  return to_csv(t);
}

void write_composite_csv(const fs::path& path, const std::vector<CompositeModel>& models) {
  write_file_atomic(path, composite_csv_text(models));
}

}  // namespace reef
