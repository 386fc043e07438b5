#include "aqs/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "aqs/rng.hpp"

namespace aqs {
namespace {

constexpr double kTau = 6.283185307179586476925286766559;
constexpr double kTropicalYearDays = 365.2425;

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

bool parse_double_field(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto r = std::from_chars(b, e, out);
  return r.ec == std::errc() && r.ptr == e && std::isfinite(out);
}

std::string key_text(const std::string& station, std::int64_t hour) {
  return "(station " + station + ", " + format_hour_iso(hour) + ")";
}

using Key = std::pair<std::string, std::int64_t>;

std::map<Key, const HourlyRecord*> index_by_key(const std::vector<HourlyRecord>& records,
                                                const char* side) {
  std::map<Key, const HourlyRecord*> idx;
  for (const auto& r : records) {
    auto [it, fresh] = idx.emplace(Key{r.station_id, r.hour}, &r);
    if (!fresh)
      throw std::invalid_argument(std::string("join_sources: duplicate key ") +
                                  key_text(r.station_id, r.hour) + " in " + side + " input");
  }
  return idx;
}

double lookup_feature(const HourlyRecord& r, const std::string& name) {
  if (name == "pm25_aqi") return r.pm25_aqi;
  auto it = r.features.find(name);
  return it == r.features.end() ? kMissing : it->second;
}

void store_feature(HourlyRecord& r, const std::string& name, double v) {
  if (name == "pm25_aqi")
    r.pm25_aqi = v;
  else
    r.features[name] = v;
}

}  // namespace

bool is_missing(double v) { return std::isnan(v); }

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

LoadResult load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_csv: " + path + " has no header row");

  auto header = split_line(line);
  std::size_t ts_col = header.size(), st_col = header.size(), pm_col = header.size();
  std::vector<std::pair<std::size_t, std::string>> feature_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "timestamp")
      ts_col = i;
    else if (header[i] == "station_id")
      st_col = i;
    else if (header[i] == "pm25_aqi")
      pm_col = i;
    else
      feature_cols.emplace_back(i, header[i]);
  }
  const std::pair<const char*, std::size_t> required[] = {
      {"timestamp", ts_col}, {"station_id", st_col}, {"pm25_aqi", pm_col}};
  for (const auto& [name, col] : required) {
    if (col == header.size())
      throw std::runtime_error("load_csv: " + path + " is missing required column '" +
                               std::string(name) + "'");
  }

  LoadResult result;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_line(line);
    if (fields.size() != header.size()) {
      result.rejects.push_back({line_no, "expected " + std::to_string(header.size()) +
                                             " fields, got " + std::to_string(fields.size())});
      continue;
    }

    HourlyRecord rec;
    try {
      rec.hour = parse_hour_iso(fields[ts_col]);
    } catch (const std::exception& e) {
      result.rejects.push_back({line_no, std::string("bad timestamp: ") + e.what()});
      continue;
    }
    rec.station_id = fields[st_col];
    if (rec.station_id.empty()) {
      result.rejects.push_back({line_no, "empty station_id"});
      continue;
    }

    bool rejected = false;
    if (!fields[pm_col].empty()) {
      if (!parse_double_field(fields[pm_col], rec.pm25_aqi)) {
        result.rejects.push_back({line_no, "non-numeric pm25_aqi '" + fields[pm_col] + "'"});
        continue;
      }
      if (rec.pm25_aqi < 0.0) {
        result.rejects.push_back({line_no, "negative pm25_aqi " + fields[pm_col]});
        continue;
      }
    }
    for (const auto& [col, name] : feature_cols) {
      if (fields[col].empty()) {
        rec.features[name] = kMissing;
        continue;
      }
      double v;
      if (!parse_double_field(fields[col], v)) {
        result.rejects.push_back({line_no, "non-numeric " + name + " '" + fields[col] + "'"});
        rejected = true;
        break;
      }
      rec.features[name] = v;
    }
    if (!rejected) result.records.push_back(std::move(rec));
  }
  return result;
}

void write_records_csv(const std::vector<HourlyRecord>& records, const std::string& path) {
  std::set<std::string> names;
  for (const auto& r : records)
    for (const auto& [name, v] : r.features) names.insert(name);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_records_csv: cannot open " + path);

  out << "timestamp,station_id,pm25_aqi";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (const auto& r : records) {
    out << format_hour_iso(r.hour) << ',' << r.station_id << ',';
    if (!is_missing(r.pm25_aqi)) out << format_g17(r.pm25_aqi);
    for (const auto& n : names) {
      out << ',';
      auto it = r.features.find(n);
      if (it != r.features.end() && !is_missing(it->second)) out << format_g17(it->second);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_records_csv: write failed for " + path);
}

std::vector<HourlyRecord> join_sources(const std::vector<HourlyRecord>& weather,
                                       const std::vector<HourlyRecord>& aqi, JoinReport* report) {
  auto weather_idx = index_by_key(weather, "weather");
  auto aqi_idx = index_by_key(aqi, "aqi");

  JoinReport rep;
  std::vector<HourlyRecord> joined;
  for (const auto& [key, aqi_rec] : aqi_idx) {
    auto it = weather_idx.find(key);
    if (it == weather_idx.end()) {
      ++rep.unmatched_aqi;
      continue;
    }
    ++rep.matched;
    HourlyRecord merged = *it->second;
    if (!is_missing(aqi_rec->pm25_aqi)) merged.pm25_aqi = aqi_rec->pm25_aqi;
    for (const auto& [name, v] : aqi_rec->features) merged.features[name] = v;
    joined.push_back(std::move(merged));
  }
  rep.unmatched_weather = weather.size() - rep.matched;
  if (report) *report = rep;
  return joined;
}

std::vector<HourlyRecord> fill_missing(std::vector<HourlyRecord> records,
                                       std::size_t max_gap_hours, FillReport* report) {
  std::map<std::string, std::vector<HourlyRecord>> by_station;
  for (auto& r : records) by_station[r.station_id].push_back(std::move(r));

  FillReport rep;
  std::vector<HourlyRecord> out;
  for (auto& [station, rows] : by_station) {
    std::sort(rows.begin(), rows.end(),
              [](const HourlyRecord& a, const HourlyRecord& b) { return a.hour < b.hour; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].hour == rows[i - 1].hour)
        throw std::invalid_argument("fill_missing: duplicate key " +
                                    key_text(station, rows[i].hour));
    }

    // Complete the hourly grid; inserted rows start out all-missing.
    const std::int64_t start = rows.front().hour;
    const std::size_t n = static_cast<std::size_t>(rows.back().hour - start) + 1;
    std::vector<HourlyRecord> grid(n);
    for (std::size_t i = 0; i < n; ++i) {
      grid[i].hour = start + static_cast<std::int64_t>(i);
      grid[i].station_id = station;
    }
    for (auto& r : rows) grid[static_cast<std::size_t>(r.hour - start)] = std::move(r);

    std::set<std::string> fields;
    fields.insert("pm25_aqi");
    for (const auto& r : grid)
      for (const auto& [name, v] : r.features) fields.insert(name);

    for (const auto& field : fields) {
      std::vector<double> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = lookup_feature(grid[i], field);

      std::size_t i = 0;
      while (i < n) {
        if (!is_missing(v[i])) {
          ++i;
          continue;
        }
        std::size_t j = i;
        while (j < n && is_missing(v[j])) ++j;
        const std::size_t len = j - i;
        GapEvent ev{station, field, start + static_cast<std::int64_t>(i), len, false};

        if (i == 0 && j == n) {
          // Field never observed at this station; nothing to copy from.
        } else if (i == 0) {
          for (std::size_t k = i; k < j; ++k) v[k] = v[j];
          ev.repaired = true;
        } else if (j == n) {
          for (std::size_t k = i; k < j; ++k) v[k] = v[i - 1];
          ev.repaired = true;
        } else if (len <= max_gap_hours) {
          const double lo = v[i - 1], hi = v[j];
          for (std::size_t k = 0; k < len; ++k)
            v[i + k] = lo + (hi - lo) * static_cast<double>(k + 1) / static_cast<double>(len + 1);
          ev.repaired = true;
        }
        rep.gaps.push_back(std::move(ev));
        i = j;
      }
      for (std::size_t k = 0; k < n; ++k) store_feature(grid[k], field, v[k]);
    }
    for (auto& r : grid) out.push_back(std::move(r));
  }
  if (report) *report = std::move(rep);
  return out;
}

FeatureSpec FeatureSpec::from_records(const std::vector<HourlyRecord>& records) {
  std::set<std::string> names;
  for (const auto& r : records)
    for (const auto& [name, v] : r.features) names.insert(name);
  names.erase("pm25_aqi");

  FeatureSpec spec;
  spec.numeric_names.push_back("pm25_aqi");
  spec.numeric_names.insert(spec.numeric_names.end(), names.begin(), names.end());
  return spec;
}

void FeatureSpec::drop_features(const std::vector<std::string>& names) {
  for (const auto& name : names) {
    if (name == "pm25_aqi")
      throw std::invalid_argument("drop_features: cannot drop the prediction target pm25_aqi");
    auto it = std::find(numeric_names.begin(), numeric_names.end(), name);
    if (it == numeric_names.end())
      throw std::invalid_argument("drop_features: unknown feature '" + name + "'");
    if (fitted()) stats.erase(stats.begin() + (it - numeric_names.begin()));
    numeric_names.erase(it);
  }
}

double normalize_value(const FeatureStats& s, double x) { return (x - s.mean) / s.stddev; }
double denormalize_value(const FeatureStats& s, double x) { return x * s.stddev + s.mean; }

FeatureSpec fit_normalization(const std::vector<HourlyRecord>& training, FeatureSpec spec,
                              std::vector<std::string>* warnings) {
  if (training.empty()) throw std::invalid_argument("fit_normalization: no training records");

  spec.stats.clear();
  for (const auto& name : spec.numeric_names) {
    std::vector<double> vals;
    for (const auto& r : training) {
      double x = lookup_feature(r, name);
      if (!is_missing(x)) vals.push_back(x);
    }
    if (vals.size() < 2)
      throw std::invalid_argument("fit_normalization: feature '" + name + "' has " +
                                  std::to_string(vals.size()) +
                                  " observed training values; need at least 2");
    double mean = 0.0;
    for (double x : vals) mean += x;
    mean /= static_cast<double>(vals.size());
    double var = 0.0;
    for (double x : vals) var += (x - mean) * (x - mean);
    var /= static_cast<double>(vals.size());

    FeatureStats st;
    st.mean = mean;
    if (var == 0.0) {
      st.stddev = 1.0;
      if (warnings)
        warnings->push_back("feature '" + name + "' is constant (" + format_g17(mean) +
                            "); using stddev 1");
    } else {
      st.stddev = std::sqrt(var);
    }
    spec.stats.push_back(st);
  }
  return spec;
}

std::vector<StationSeries> build_features(const std::vector<HourlyRecord>& records,
                                          const FeatureSpec& spec,
                                          const std::set<std::int64_t>& holiday_days) {
  if (!spec.fitted())
    throw std::invalid_argument("build_features: normalization stats not fitted");

  std::set<std::string> present;
  for (const auto& r : records)
    for (const auto& [name, v] : r.features) present.insert(name);
  for (const auto& name : spec.numeric_names) {
    if (name != "pm25_aqi" && !present.count(name))
      throw std::invalid_argument("build_features: feature '" + name +
                                  "' not present in records");
  }

  std::map<std::string, std::vector<const HourlyRecord*>> by_station;
  for (const auto& r : records) by_station[r.station_id].push_back(&r);

  const std::size_t dim = spec.dimension();
  const std::size_t nc = spec.numeric_count();
  std::vector<StationSeries> out;
  for (auto& [station, rows] : by_station) {
    std::sort(rows.begin(), rows.end(),
              [](const HourlyRecord* a, const HourlyRecord* b) { return a->hour < b->hour; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i]->hour != rows[i - 1]->hour + 1)
        throw std::invalid_argument(
            "build_features: station " + station + " is not hourly-contiguous at " +
            format_hour_iso(rows[i]->hour) + "; run the gap-repair stage first");
    }

    StationSeries series;
    series.station_id = station;
    series.start_hour = rows.front()->hour;
    series.rows.reserve(rows.size());
    for (const HourlyRecord* rec : rows) {
      FeatureRow fr;
      fr.values.assign(dim, 0.0);
      for (std::size_t k = 0; k < nc; ++k) {
        double raw = lookup_feature(*rec, spec.numeric_names[k]);
        if (is_missing(raw))
          fr.usable = false;
        else
          fr.values[k] = normalize_value(spec.stats[k], raw);
      }
      CivilHour c = civil_from_hours(rec->hour);
      fr.values[nc + static_cast<std::size_t>(c.month - 1)] = 1.0;
      fr.values[nc + 12 + static_cast<std::size_t>(c.hour)] = 1.0;
      if (holiday_days.count(days_from_civil(c.year, c.month, c.day))) fr.values[dim - 1] = 1.0;
      series.rows.push_back(std::move(fr));
    }
    out.push_back(std::move(series));
  }
  return out;
}

std::set<std::int64_t> load_holidays(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_holidays: cannot open " + path);

  std::set<std::int64_t> days;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      days.insert(parse_date_iso(line));
    } catch (const std::exception& e) {
      throw std::runtime_error("load_holidays: " + path + " line " + std::to_string(line_no) +
                               ": " + e.what());
    }
  }
  return days;
}

std::vector<WindowSample> make_windows(const std::vector<StationSeries>& series,
                                       std::size_t t_enc, std::size_t horizon) {
  if (t_enc == 0 || horizon == 0)
    throw std::invalid_argument("make_windows: t_enc and horizon must be at least 1");

  std::vector<WindowSample> windows;
  for (const auto& s : series) {
    const std::size_t n = s.rows.size();
    const std::size_t span = t_enc + horizon;
    if (n < span) continue;
    const std::size_t dim = s.rows.front().values.size();

    // Prefix counts of unusable rows, so each window check is O(1).
    std::vector<std::size_t> bad(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) bad[i + 1] = bad[i] + (s.rows[i].usable ? 0 : 1);

    for (std::size_t start = 0; start + span <= n; ++start) {
      if (bad[start + span] - bad[start] != 0) continue;
      WindowSample w;
      w.encoder = Matrix(t_enc, dim);
      for (std::size_t t = 0; t < t_enc; ++t)
        for (std::size_t j = 0; j < dim; ++j) w.encoder(t, j) = s.rows[start + t].values[j];
      w.target.resize(horizon);
      for (std::size_t h = 0; h < horizon; ++h) w.target[h] = s.rows[start + t_enc + h].values[0];
      w.station_id = s.station_id;
      w.start_hour = s.start_hour + static_cast<std::int64_t>(start);
      windows.push_back(std::move(w));
    }
  }
  return windows;
}

std::pair<std::vector<WindowSample>, std::vector<WindowSample>> split_train_val(
    std::vector<WindowSample> windows, std::uint64_t seed, double fraction) {
  if (windows.empty()) throw std::invalid_argument("split_train_val: no windows to split");
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("split_train_val: fraction must lie in (0,1)");

  std::mt19937_64 rng(seed);
  auto idx = shuffled_indices(windows.size(), rng);
  const auto val_count =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(windows.size())));

  std::vector<WindowSample> val, train;
  val.reserve(val_count);
  train.reserve(windows.size() - val_count);
  for (std::size_t i = 0; i < idx.size(); ++i)
    (i < val_count ? val : train).push_back(std::move(windows[idx[i]]));
  return {std::move(train), std::move(val)};
}

std::vector<WindowSample> subsample_windows(std::vector<WindowSample> windows,
                                            std::size_t stride) {
  if (stride == 0) throw std::invalid_argument("subsample_windows: stride must be at least 1");
  if (stride == 1) return windows;
  std::vector<WindowSample> out;
  out.reserve(windows.size() / stride + 1);
  for (std::size_t i = 0; i < windows.size(); i += stride) out.push_back(std::move(windows[i]));
  return out;
}

SynthProfile SynthProfile::named(const std::string& name) {
  SynthProfile p;
  if (name == "plain") {
    p.annual_amp = 0.0;
  } else if (name == "seasonal") {
    // defaults
  } else if (name == "upstream") {
    p.upstream_amp = 25.0;
  } else if (name == "two-regime") {
    p.regime_shift = 45.0;
    p.regime_boundary_hour = p.start_hour + 4380;  // half a nominal year
  } else {
    throw std::invalid_argument("unknown synth profile '" + name +
                                "' (expected plain, seasonal, upstream or two-regime)");
  }
  return p;
}

namespace {

// Deterministic (noise-free) part of the synthetic target, before clamping.
double synth_det_sum(const SynthProfile& p, std::int64_t hour) {
  CivilHour c = civil_from_hours(hour);
  const double doy = static_cast<double>(day_of_year(hour));
  const double hod = static_cast<double>(c.hour);

  double v = p.base;
  v += p.annual_amp * std::cos(kTau * (doy - 14.0) / kTropicalYearDays);
  v += p.diurnal_amp * std::cos(kTau * (hod - 8.0) / 24.0);
  // Deterministic wind component: mean 3, diurnal swing peaking at 14:00.
  v -= p.wind_coeff * (1.5 * std::cos(kTau * (hod - 14.0) / 24.0));
  if (p.upstream_amp != 0.0) {
    CivilHour cu = civil_from_hours(hour - static_cast<std::int64_t>(p.upstream_lag));
    v += 0.5 * p.upstream_amp * std::cos(kTau * (static_cast<double>(cu.hour) - 2.0) / 24.0);
  }
  if (p.regime_shift != 0.0 && hour >= p.regime_boundary_hour && p.regime_boundary_hour != 0)
    v += p.regime_shift;
  return v;
}

double upstream_det(const SynthProfile& p, std::int64_t hour) {
  CivilHour c = civil_from_hours(hour);
  return 50.0 + p.upstream_amp * std::cos(kTau * (static_cast<double>(c.hour) - 2.0) / 24.0);
}

}  // namespace

double synth_clean_value(const SynthProfile& profile, std::int64_t hour) {
  return std::max(0.0, synth_det_sum(profile, hour));
}

std::vector<HourlyRecord> synth_generate(std::uint64_t seed, std::size_t hours,
                                         const SynthProfile& profile) {
  if (hours == 0) throw std::invalid_argument("synth_generate: hours must be at least 1");

  // Separate streams keep the main series bit-identical whether or not the
  // upstream covariate is enabled.
  std::mt19937_64 rng_main(mix_seed(seed, 0));
  std::mt19937_64 rng_up(mix_seed(seed, 1));

  const std::size_t lag = profile.upstream_lag;
  std::vector<double> upstream;
  if (profile.upstream_amp != 0.0) {
    upstream.resize(hours + lag);
    for (std::size_t i = 0; i < upstream.size(); ++i) {
      std::int64_t h = profile.start_hour - static_cast<std::int64_t>(lag) +
                       static_cast<std::int64_t>(i);
      upstream[i] = upstream_det(profile, h) + 1.5 * profile.noise_sigma * gaussian(rng_up);
    }
  }

  std::vector<HourlyRecord> out;
  out.reserve(hours);
  for (std::size_t t = 0; t < hours; ++t) {
    const std::int64_t h = profile.start_hour + static_cast<std::int64_t>(t);
    CivilHour c = civil_from_hours(h);
    const double doy = static_cast<double>(day_of_year(h));
    const double hod = static_cast<double>(c.hour);

    // Fixed draw order per hour, independent of profile switches.
    const double g_pm = gaussian(rng_main);
    const double g_wind = gaussian(rng_main);
    const double g_temp = gaussian(rng_main);
    const double g_hum = gaussian(rng_main);

    const double wind_noise = 0.15 * profile.noise_sigma * g_wind;
    const double wind =
        3.0 + 1.5 * std::cos(kTau * (hod - 14.0) / 24.0) + wind_noise;
    const double temp = 12.0 - 12.0 * std::cos(kTau * (doy - 196.0) / kTropicalYearDays) +
                        4.0 * std::cos(kTau * (hod - 14.0) / 24.0) +
                        0.25 * profile.noise_sigma * g_temp;
    const double hum = 60.0 + 15.0 * std::cos(kTau * (hod - 4.0) / 24.0) +
                       0.5 * profile.noise_sigma * g_hum;

    double noise = profile.noise_sigma * g_pm - profile.wind_coeff * wind_noise;
    if (profile.upstream_amp != 0.0) {
      // The target responds to the lagged *observed* upstream value, so the
      // covariate carries information the clock features cannot supply.
      std::int64_t lag_hour = h - static_cast<std::int64_t>(lag);
      noise += 0.5 * (upstream[t] - upstream_det(profile, lag_hour));
    }

    HourlyRecord rec;
    rec.hour = h;
    rec.station_id = profile.station_id;
    rec.pm25_aqi = std::max(0.0, synth_det_sum(profile, h) + noise);
    rec.features["temperature"] = temp;
    rec.features["wind_speed"] = wind;
    rec.features["humidity"] = hum;
    if (profile.upstream_amp != 0.0) rec.features["upstream_aqi"] = upstream[t + lag];
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace aqs
