#pragma once

#include "reef/indices.hpp"
#include "reef/timeutil.hpp"

#include <Eigen/Dense>

#include <array>
#include <chrono>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace reef {

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double student_t_two_tailed_p(double t, double df);

// P(F >= f) for the F distribution with (d1, d2) degrees of freedom.
double f_upper_p(double f, double d1, double d2);

enum class Tier { ns, p05, p01, p001 };

// *, ** and *** at p < 0.05, 0.01 and 0.001 (strict); "ns" otherwise.
Tier significance_tier(double p);
std::string to_string(Tier tier);

struct CorrelationResult {
  std::optional<double> r;  // empty when undefined (constant input, n < 3)
  std::size_t n = 0;
  std::optional<double> t;
  std::optional<double> p_value;  // two-tailed
  Tier tier = Tier::ns;

  bool defined() const { return r.has_value(); }
};

// Pearson product-moment correlation with a t-test on n - 2 degrees of
// freedom. Throws InvalidArgument on unequal lengths.
CorrelationResult pearson(std::span<const double> x, std::span<const double> y);

enum class ReefParameter {
  live_coral_richness,
  live_coral_size,
  live_coral_cover,
  dead_coral_cover,
  invertebrate_cover,
  algal_cover,
  macroalgal_cover,
};
inline constexpr std::size_t kReefParameterCount = 7;
inline constexpr std::array<ReefParameter, kReefParameterCount> kAllReefParameters = {
    ReefParameter::live_coral_richness, ReefParameter::live_coral_size,
    ReefParameter::live_coral_cover,    ReefParameter::dead_coral_cover,
    ReefParameter::invertebrate_cover,  ReefParameter::algal_cover,
    ReefParameter::macroalgal_cover,
};

std::string to_string(ReefParameter p);
ReefParameter parse_reef_parameter(const std::string& text);
bool is_percentage(ReefParameter p);

struct TransectRecord {
  std::string site_id;
  std::chrono::sys_days survey_date;
  std::array<double, kReefParameterCount> values{};

  double get(ReefParameter p) const { return values[static_cast<std::size_t>(p)]; }
  double& get(ReefParameter p) { return values[static_cast<std::size_t>(p)]; }

  // Percentages in [0, 100], richness and size >= 0, macroalgal cover not
  // above algal cover. Throws InvalidArgument.
  void validate() const;
};

// Columns: site_id, survey_date, then one column per parameter named as
// to_string(ReefParameter). Rows are validated.
std::vector<TransectRecord> read_transect_csv(const std::filesystem::path& path);
void write_transect_csv(const std::filesystem::path& path, const std::vector<TransectRecord>& records);

// Records of one site sorted by date.
std::vector<TransectRecord> site_records(const std::vector<TransectRecord>& records,
                                         const std::string& site_id);

// Linear interpolation between the site's surveys (which must all belong
// to one site; duplicate dates are rejected). Queries outside the survey
// range give nullopt; a single survey is defined only on its own date.
std::optional<double> interpolate_transect(const std::vector<TransectRecord>& site,
                                           ReefParameter p, Timestamp at);
std::array<std::optional<double>, kReefParameterCount> interpolate_transect(
    const std::vector<TransectRecord>& site, Timestamp at);

// C(d) = A cos(2 pi (d - phi) / 365) + B with d = 0 on January 1.
struct CyclicFit {
  double A = 0.0;
  double B = 0.0;
  std::optional<double> phi;  // days in [0, 365); empty when A = 0
  double residual_rms = 0.0;
  std::size_t n = 0;

  double evaluate(double day) const;
};

struct CyclicObservation {
  double day = 0.0;  // day of year, 0 = January 1; may be fractional
  double cover = 0.0;
};

inline constexpr double kCyclicPeriodDays = 365.0;
inline constexpr double kCyclicMinSpanDays = 120.0;

// Linear least squares on cos, sin and constant terms, then converted to
// amplitude and phase. Needs at least 3 observations whose days span at
// least 120 days; throws InvalidArgument otherwise.
CyclicFit fit_cyclic(std::span<const CyclicObservation> obs);

// Day of year of the middle of month m (1..12) in a 365-day year.
double month_midpoint_day(unsigned month);

enum class CorrelationMode { temporal, spatial, per_site_cyclic };
std::string to_string(CorrelationMode mode);
CorrelationMode parse_correlation_mode(const std::string& text);

struct CorrelateOptions {
  CorrelationMode mode = CorrelationMode::temporal;
  // Temporal mode: average daily pairs within each survey interval instead
  // of pooling them.
  bool windowed_mean = false;
  // Per-site-cyclic mode: parameter fitted with the cyclic model.
  ReefParameter cyclic_parameter = ReefParameter::macroalgal_cover;
};

struct CorrelationRow {
  IndexKind index = IndexKind::spl_low;
  ReefParameter parameter = ReefParameter::live_coral_cover;
  CorrelationMode mode = CorrelationMode::temporal;
  std::string site_id;  // per-site rows only
  CorrelationResult result;
  std::optional<CyclicFit> fit;  // per-site-cyclic rows only
};

// `series` holds one index kind (any number of sites).
//  temporal: per-site daily index means paired with the parameter
//    interpolated at each date, pooled over sites.
//  spatial: one (site mean index, site mean parameter) pair per site.
//  per_site_cyclic: per site, month-of-year index means against the
//    site's cyclic fit evaluated at month midpoints.
std::vector<CorrelationRow> correlate_index(const std::vector<IndexSeries>& series,
                                            const std::vector<TransectRecord>& records,
                                            const CorrelateOptions& options = {});

// Correlation CSV: index_kind, reef_parameter, mode, site_id, n, r, t,
// p_value, tier, fit_A, fit_B, fit_phi.
std::string correlation_csv_text(const std::vector<CorrelationRow>& rows);
void write_correlation_csv(const std::filesystem::path& path, const std::vector<CorrelationRow>& rows);

struct CorrelationCsvRow {
  std::string index_kind;
  std::string reef_parameter;
  std::string mode;
  std::string site_id;
  std::optional<double> r;
  std::optional<double> p_value;
  std::string tier;
  std::optional<double> fit_A, fit_B, fit_phi;
};
std::vector<CorrelationCsvRow> read_correlation_csv(const std::filesystem::path& path);

inline constexpr double kConditionLimit = 1e8;

struct CompositeOptions {
  // Z-score the design columns before fitting.
  bool standardize = false;
  double alpha = 0.05;
  double condition_limit = kConditionLimit;
};

struct CompositeModel {
  std::string reef_parameter;
  // a (snap rate), b (SPL), c (ACI), d (intercept)
  std::array<double, 4> coef{};
  std::array<double, 4> p{};
  std::array<bool, 4> significant{};
  std::optional<double> R;        // Pearson(fitted, target)
  std::optional<double> p_value;  // regression F-test
  std::size_t n = 0;
  bool standardized = false;
  std::array<double, 3> column_mean{};   // standardization applied to inputs
  std::array<double, 3> column_scale{1.0, 1.0, 1.0};
  Eigen::VectorXd fitted;
  Eigen::VectorXd residuals;

  double predict(double snap_rate, double spl, double aci) const;
};

// Ordinary least squares of target on [snap_rate, spl, aci, 1]. Needs at
// least 5 rows. A design whose column-scaled condition number exceeds the
// limit is rejected as rank-deficient (InvalidArgument).
CompositeModel fit_composite(const Eigen::MatrixXd& design, const Eigen::VectorXd& target,
                             const CompositeOptions& options = {});

struct CompositeData {
  Eigen::MatrixXd design;  // n x 3: snap_rate, spl, aci
  std::vector<std::string> site_ids;
  std::vector<std::optional<std::chrono::sys_days>> dates;  // temporal rows
  std::array<std::vector<std::optional<double>>, kReefParameterCount> targets;
};

// Temporal: one row per (site, date) with all three indices, targets
// interpolated on that date. Spatial: one row per site of site means and
// mean survey values.
CompositeData build_composite_data(const std::vector<IndexSeries>& series,
                                   const std::vector<TransectRecord>& records,
                                   CorrelationMode mode, IndexKind spl_kind = IndexKind::spl_low);

// Design CSV: snap_rate, spl, aci and any number of reef-parameter columns.
CompositeData read_design_csv(const std::filesystem::path& path);

// Fits every parameter that has at least 5 defined targets.
std::vector<CompositeModel> fit_all_parameters(const CompositeData& data,
                                               const CompositeOptions& options = {},
                                               std::vector<std::string>* skipped = nullptr);

// reef_parameter, a_i, b_i, c_i, d_i, p_a, p_b, p_c, p_d, R, p
std::string composite_csv_text(const std::vector<CompositeModel>& models);
void write_composite_csv(const std::filesystem::path& path, const std::vector<CompositeModel>& models);

}  // namespace reef
