#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "aqs/matrix.hpp"
#include "aqs/timeutil.hpp"

namespace aqs {

// Missing values travel as quiet NaN until the repair stage; nothing past
// window construction may contain one.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
bool is_missing(double v);

// Shortest round-trippable decimal form used by every CSV writer here.
std::string format_g17(double v);

// One hour of one station: the target AQI plus named numeric covariates.
struct HourlyRecord {
  std::int64_t hour = 0;  // hours since epoch, civil
  std::string station_id;
  double pm25_aqi = kMissing;
  std::map<std::string, double> features;
};

struct RowIssue {
  std::size_t row = 0;  // 1-based line number in the source file
  std::string reason;
};

struct LoadResult {
  std::vector<HourlyRecord> records;
  std::vector<RowIssue> rejects;
};

// Reads a canonical hourly CSV: header row with at least timestamp,
// station_id, pm25_aqi; every other column becomes a numeric feature. Empty
// fields are missing values. Unparseable rows land in the rejection list
// instead of being dropped silently.
LoadResult load_csv(const std::string& path);

// Writes records back in the canonical CSV layout (deterministic column
// order, 17 significant digits).
void write_records_csv(const std::vector<HourlyRecord>& records, const std::string& path);

struct JoinReport {
  std::size_t matched = 0;
  std::size_t unmatched_weather = 0;
  std::size_t unmatched_aqi = 0;
};

// Inner join on (station_id, hour). Feature maps are merged (the aqi side
// wins on a name clash); the target comes from the aqi side when present.
// A duplicate key inside either source throws, naming the key.
std::vector<HourlyRecord> join_sources(const std::vector<HourlyRecord>& weather,
                                       const std::vector<HourlyRecord>& aqi,
                                       JoinReport* report = nullptr);

struct GapEvent {
  std::string station_id;
  std::string field;
  std::int64_t start_hour = 0;
  std::size_t length = 0;
  bool repaired = false;
};

struct FillReport {
  std::vector<GapEvent> gaps;
};

// Completes each station's hourly grid and repairs missing values per field:
// interior gaps up to max_gap_hours are linearly interpolated, missing edges
// copy the nearest observed value, and longer gaps stay missing (their rows
// are later excluded from window construction). Throws on duplicate
// (station, hour) keys.
std::vector<HourlyRecord> fill_missing(std::vector<HourlyRecord> records,
                                       std::size_t max_gap_hours = 5,
                                       FillReport* report = nullptr);

struct FeatureStats {
  double mean = 0.0;
  double stddev = 1.0;
};

// Ordered numeric feature layout plus normalization statistics. pm25_aqi is
// always the first numeric feature, so column 0 of every encoder block is
// the normalized target. The full vector is the numeric features followed by
// month one-hot (12), hour one-hot (24) and a holiday flag.
struct FeatureSpec {
  std::vector<std::string> numeric_names;
  std::vector<FeatureStats> stats;  // parallel to numeric_names once fitted

  bool fitted() const { return !stats.empty(); }
  std::size_t numeric_count() const { return numeric_names.size(); }
  std::size_t dimension() const { return numeric_names.size() + 37; }

  // Derives the deterministic feature order from records: pm25_aqi first,
  // remaining feature names sorted.
  static FeatureSpec from_records(const std::vector<HourlyRecord>& records);

  // Removes named feature columns (used for ablation runs). Unknown names
  // and pm25_aqi itself are errors.
  void drop_features(const std::vector<std::string>& names);
};

double normalize_value(const FeatureStats& s, double x);
double denormalize_value(const FeatureStats& s, double x);

// Computes mean and population standard deviation per numeric feature over
// the given records only. Requires at least two observed values per feature;
// a constant feature gets stddev 1 and a warning.
FeatureSpec fit_normalization(const std::vector<HourlyRecord>& training, FeatureSpec spec,
                              std::vector<std::string>* warnings = nullptr);

// Hourly feature rows of one station, contiguous from start_hour. Rows whose
// fields could not be repaired are flagged unusable.
struct FeatureRow {
  std::vector<double> values;  // size = spec.dimension(); values[0] = normalized target
  bool usable = true;
};

struct StationSeries {
  std::string station_id;
  std::int64_t start_hour = 0;
  std::vector<FeatureRow> rows;
};

// Builds normalized feature vectors; holiday_days is a set of epoch days.
// Throws if the spec names a feature the records do not carry.
std::vector<StationSeries> build_features(const std::vector<HourlyRecord>& records,
                                          const FeatureSpec& spec,
                                          const std::set<std::int64_t>& holiday_days);

// Holiday file: one ISO date per line, '#' comments and blank lines allowed.
std::set<std::int64_t> load_holidays(const std::string& path);

// One training instance: t_enc consecutive feature rows and the horizon
// target values (normalized) that follow them.
struct WindowSample {
  Matrix encoder;               // t_enc x dimension
  std::vector<double> target;   // horizon values, normalized AQI
  std::string station_id;
  std::int64_t start_hour = 0;
};

// Stride-1 sliding windows per station; windows touching an unusable row are
// skipped. A series shorter than t_enc + horizon yields no windows.
std::vector<WindowSample> make_windows(const std::vector<StationSeries>& series,
                                       std::size_t t_enc, std::size_t horizon);

// Seeded shuffle, then round(fraction * N) windows become the validation
// split. The two parts are disjoint and jointly exhaust the input.
std::pair<std::vector<WindowSample>, std::vector<WindowSample>> split_train_val(
    std::vector<WindowSample> windows, std::uint64_t seed, double fraction = 0.20);

// Keeps every stride-th window (stride 1 = all). Thins the stride-1 window
// set down to desk scale without biasing toward any part of the series.
std::vector<WindowSample> subsample_windows(std::vector<WindowSample> windows,
                                            std::size_t stride);

// Synthetic hourly generator: an annual cycle peaking mid-January, a diurnal
// cycle, weather covariates coupled to the target by the coefficients below,
// an optional upstream pollution pulse that hits the target after a fixed
// lag, and seeded Gaussian noise.
struct SynthProfile {
  std::int64_t start_hour = hours_from_civil(2015, 1, 1, 0);
  std::string station_id = "S1";
  double base = 80.0;
  double annual_amp = 40.0;    // peaks around Jan 15
  double diurnal_amp = 12.0;   // peaks at 08:00
  double noise_sigma = 4.0;
  double wind_coeff = 2.0;     // AQI drop per unit of wind above its mean
  double upstream_amp = 0.0;   // 0 disables the upstream_aqi covariate column
  std::size_t upstream_lag = 10;
  // Level shift applied from regime_boundary_hour onward (0 = single regime).
  std::int64_t regime_boundary_hour = 0;
  double regime_shift = 0.0;

  static SynthProfile named(const std::string& name);  // plain|seasonal|upstream|two-regime
};

std::vector<HourlyRecord> synth_generate(std::uint64_t seed, std::size_t hours,
                                         const SynthProfile& profile);

// Deterministic closed form of the noise-free series (used by tests and
// documented in the README): base + annual + diurnal - wind_coeff * (wind -
// wind mean) + upstream response, clamped at zero.
double synth_clean_value(const SynthProfile& profile, std::int64_t hour);

}  // namespace aqs
