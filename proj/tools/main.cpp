// aqs: hourly air-quality forecasting pipeline.
//
// Subcommands cover the whole workflow: generate synthetic data (synth),
// ingest and repair real CSVs (prepare), fit models (train, transfer), use
// them (predict, evaluate), run the full setting-by-horizon experiment grid
// (experiment), and verify gradients (gradcheck). Every command writes its
// artifacts plus a manifest.txt into --out and nowhere else.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aqs/eval.hpp"

namespace {

constexpr const char* kToolVersion = "1.0.0";

using KeyValues = std::vector<std::pair<std::string, std::string>>;

void write_manifest(const std::string& out_dir, const std::string& command, KeyValues entries,
                    std::chrono::steady_clock::time_point started) {
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);
  std::ofstream out(out_dir + "/manifest.txt");
  if (!out) throw std::runtime_error("cannot write " + out_dir + "/manifest.txt");
  out << "command=" << command << '\n';
  out << "tool_version=" << kToolVersion << '\n';
  for (const auto& [k, v] : entries) out << k << '=' << v << '\n';
  out << "duration_ms=" << elapsed.count() << '\n';
}

void append_config(KeyValues& entries, const aqs::TrainConfig& cfg) {
  std::istringstream text(aqs::config_text(cfg));
  std::string line;
  while (std::getline(text, line)) {
    auto eq = line.find('=');
    entries.emplace_back("config." + line.substr(0, eq), line.substr(eq + 1));
  }
  entries.emplace_back("fingerprint", aqs::config_fingerprint(cfg));
}

// Shared ingestion path: parse, report rejects, complete the hourly grid.
std::vector<aqs::HourlyRecord> load_and_fill(const std::string& path, std::size_t max_gap,
                                             std::size_t* reject_count = nullptr,
                                             aqs::FillReport* fill_report = nullptr) {
  aqs::LoadResult loaded = aqs::load_csv(path);
  if (!loaded.rejects.empty())
    std::cerr << "warning: " << loaded.rejects.size() << " rejected rows in " << path << '\n';
  if (reject_count) *reject_count = loaded.rejects.size();
  if (loaded.records.empty()) throw std::runtime_error(path + " contains no usable records");
  return aqs::fill_missing(std::move(loaded.records), max_gap, fill_report);
}

std::set<std::int64_t> maybe_holidays(const std::string& path) {
  return path.empty() ? std::set<std::int64_t>{} : aqs::load_holidays(path);
}

// ---------------------------------------------------------------- synth --

struct SynthArgs {
  std::uint64_t seed = 0;
  std::size_t hours = 8760;
  std::string profile = "seasonal";
  std::string start = "2015-01-01T00:00";
  std::string station = "S1";
  double noise = -1.0;  // <0 keeps the profile default
  std::string out;
};

int cmd_synth(const SynthArgs& a) {
  const auto started = std::chrono::steady_clock::now();
  aqs::SynthProfile profile = aqs::SynthProfile::named(a.profile);
  profile.start_hour = aqs::parse_hour_iso(a.start);
  profile.station_id = a.station;
  if (a.noise >= 0.0) profile.noise_sigma = a.noise;
  if (a.profile == "two-regime")
    profile.regime_boundary_hour =
        profile.start_hour + static_cast<std::int64_t>(a.hours / 2);

  auto records = aqs::synth_generate(a.seed, a.hours, profile);
  std::filesystem::create_directories(a.out);
  const std::string data_path = a.out + "/data.csv";
  aqs::write_records_csv(records, data_path);

  KeyValues kv{{"seed", std::to_string(a.seed)},
               {"hours", std::to_string(a.hours)},
               {"profile", a.profile},
               {"start", a.start},
               {"station", a.station},
               {"noise_sigma", aqs::format_g17(profile.noise_sigma)},
               {"regime_boundary_hour", std::to_string(profile.regime_boundary_hour)},
               {"output.data", data_path}};
  write_manifest(a.out, "synth", std::move(kv), started);
  std::cout << "wrote " << records.size() << " rows to " << data_path << '\n';
  return 0;
}

// -------------------------------------------------------------- prepare --

struct PrepareArgs {
  std::string aqi;
  std::string weather;
  std::string holidays;
  std::size_t max_gap = 5;
  std::string out;
};

int cmd_prepare(const PrepareArgs& a) {
  const auto started = std::chrono::steady_clock::now();
  std::filesystem::create_directories(a.out);

  aqs::LoadResult aqi = aqs::load_csv(a.aqi);
  std::vector<aqs::HourlyRecord> records;
  aqs::JoinReport join;
  std::vector<std::pair<std::string, aqs::RowIssue>> rejects;
  for (const auto& r : aqi.rejects) rejects.emplace_back(a.aqi, r);

  if (!a.weather.empty()) {
    aqs::LoadResult weather = aqs::load_csv(a.weather);
    for (const auto& r : weather.rejects) rejects.emplace_back(a.weather, r);
    records = aqs::join_sources(weather.records, aqi.records, &join);
  } else {
    records = std::move(aqi.records);
    join.matched = records.size();
  }
  if (records.empty()) throw std::runtime_error("no records survive ingestion");

  aqs::FillReport fills;
  records = aqs::fill_missing(std::move(records), a.max_gap, &fills);
  const std::string data_path = a.out + "/prepared.csv";
  aqs::write_records_csv(records, data_path);

  {
    std::ofstream out(a.out + "/rejects.csv");
    out << "source,row,reason\n";
    for (const auto& [source, issue] : rejects)
      out << source << ',' << issue.row << ",\"" << issue.reason << "\"\n";
  }
  {
    std::ofstream out(a.out + "/gaps.csv");
    out << "station_id,field,start,length_hours,repaired\n";
    for (const auto& g : fills.gaps)
      out << g.station_id << ',' << g.field << ',' << aqs::format_hour_iso(g.start_hour) << ','
          << g.length << ',' << (g.repaired ? "yes" : "no") << '\n';
  }

  aqs::FeatureSpec spec = aqs::FeatureSpec::from_records(records);
  KeyValues kv{{"input.aqi", a.aqi},
               {"input.weather", a.weather.empty() ? "-" : a.weather},
               {"max_gap_hours", std::to_string(a.max_gap)},
               {"rows", std::to_string(records.size())},
               {"rejected_rows", std::to_string(rejects.size())},
               {"join.matched", std::to_string(join.matched)},
               {"join.unmatched_weather", std::to_string(join.unmatched_weather)},
               {"join.unmatched_aqi", std::to_string(join.unmatched_aqi)},
               {"gap_events", std::to_string(fills.gaps.size())},
               {"numeric_features", std::to_string(spec.numeric_count())},
               {"feature_dimension", std::to_string(spec.dimension())},
               {"output.data", data_path}};
  write_manifest(a.out, "prepare", std::move(kv), started);
  std::cout << "prepared " << records.size() << " rows (feature dimension " << spec.dimension()
            << ") -> " << data_path << '\n';
  return 0;
}

// ---------------------------------------------------------------- train --

struct TrainArgs {
  std::string data;
  std::string holidays;
  std::vector<std::string> drop;
  aqs::TrainConfig cfg;
  double val_fraction = 0.2;
  std::size_t window_stride = 1;
  std::size_t max_gap = 5;
  std::string loss = "mae";
  std::string variant = "paper_literal";
  std::string out;
};

void add_run_flags(CLI::App* cmd, TrainArgs& a, bool architecture) {
  cmd->add_option("--data", a.data, "Training dataset CSV")->required();
  cmd->add_option("--holidays", a.holidays, "Holiday date file (one ISO date per line)");
  cmd->add_option("--seed", a.cfg.seed, "Run seed (mandatory: no silent entropy)")->required();
  cmd->add_option("--epochs", a.cfg.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--batch", a.cfg.batch_size, "Mini-batch size")->capture_default_str();
  cmd->add_option("--lr", a.cfg.lr, "ADAM learning rate")->capture_default_str();
  cmd->add_option("--loss", a.loss, "Training loss: mae or mse")->capture_default_str();
  cmd->add_option("--clip", a.cfg.clip_norm, "Gradient clipping max global norm")
      ->capture_default_str();
  cmd->add_option("--patience", a.cfg.patience,
                  "Early-stop patience in epochs (0 disables early stopping)")
      ->capture_default_str();
  cmd->add_option("--val-fraction", a.val_fraction, "Validation window fraction")
      ->capture_default_str();
  cmd->add_option("--window-stride", a.window_stride,
                  "Keep every k-th window (thins stride-1 windowing)")
      ->capture_default_str();
  cmd->add_option("--max-gap", a.max_gap, "Longest gap repaired by interpolation, hours")
      ->capture_default_str();
  if (architecture) {
    cmd->add_option("--depth", a.cfg.depth, "Stacked LSTM layers (1 or 2)")
        ->capture_default_str();
    cmd->add_option("--hidden", a.cfg.hidden, "Hidden state size")->capture_default_str();
    cmd->add_option("--t-enc", a.cfg.t_enc, "Encoder window length, hours")
        ->capture_default_str();
    cmd->add_option("--horizon", a.cfg.horizon, "Decoded steps, hours")->capture_default_str();
    cmd->add_option("--variant", a.variant,
                    "Cell wiring: paper_literal (input-only candidate) or standard_candidate")
        ->capture_default_str();
    cmd->add_option("--drop-features", a.drop, "Feature columns to remove before training")
        ->delimiter(',');
  }
  cmd->add_option("--out", a.out, "Output directory")->required();
}

int cmd_train(TrainArgs& a) {
  const auto started = std::chrono::steady_clock::now();
  a.cfg.loss = aqs::loss_kind_from_string(a.loss);
  a.cfg.variant = aqs::cell_variant_from_string(a.variant);

  std::size_t rejected = 0;
  auto records = load_and_fill(a.data, a.max_gap, &rejected);
  aqs::FeatureSpec spec = aqs::FeatureSpec::from_records(records);
  if (!a.drop.empty()) spec.drop_features(a.drop);
  std::vector<std::string> warnings;
  spec = aqs::fit_normalization(records, std::move(spec), &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';

  auto series = aqs::build_features(records, spec, maybe_holidays(a.holidays));
  auto windows = aqs::subsample_windows(
      aqs::make_windows(series, a.cfg.t_enc, a.cfg.horizon), a.window_stride);
  if (windows.empty()) throw std::runtime_error("no training windows could be built from " + a.data);
  auto [train_w, val_w] = aqs::split_train_val(std::move(windows), a.cfg.seed, a.val_fraction);

  aqs::Checkpoint ck = aqs::train(train_w, val_w, a.cfg, spec, &std::cout);

  std::filesystem::create_directories(a.out);
  const std::string ckpt_path = a.out + "/model.ckpt";
  aqs::save_checkpoint(ck, ckpt_path);
  {
    std::ofstream out(a.out + "/history.csv");
    out << "epoch,train_loss,val_loss\n";
    for (std::size_t i = 0; i < ck.history.size(); ++i)
      out << i + 1 << ',' << aqs::format_g17(ck.history[i].train_loss) << ','
          << aqs::format_g17(ck.history[i].val_loss) << '\n';
  }

  KeyValues kv{{"input.data", a.data},
               {"input.holidays", a.holidays.empty() ? "-" : a.holidays},
               {"rejected_rows", std::to_string(rejected)},
               {"windows.train", std::to_string(train_w.size())},
               {"windows.val", std::to_string(val_w.size())},
               {"window_stride", std::to_string(a.window_stride)},
               {"val_fraction", aqs::format_g17(a.val_fraction)},
               {"feature_dimension", std::to_string(spec.dimension())},
               {"best_epoch", std::to_string(ck.best_epoch)},
               {"output.checkpoint", ckpt_path}};
  append_config(kv, ck.config);
  write_manifest(a.out, "train", std::move(kv), started);
  std::cout << "saved " << ckpt_path << " (best epoch " << ck.best_epoch << ")\n";
  return 0;
}

// ------------------------------------------------------------- transfer --

struct TransferArgs {
  TrainArgs run;
  std::string base;
};

int cmd_transfer(TransferArgs& a) {
  const auto started = std::chrono::steady_clock::now();
  a.run.cfg.loss = aqs::loss_kind_from_string(a.run.loss);

  aqs::Checkpoint base = aqs::load_checkpoint(a.base);
  std::size_t rejected = 0;
  auto records = load_and_fill(a.run.data, a.run.max_gap, &rejected);
  auto series = aqs::build_features(records, base.features, maybe_holidays(a.run.holidays));
  auto windows = aqs::subsample_windows(
      aqs::make_windows(series, base.config.t_enc, base.config.horizon), a.run.window_stride);
  if (windows.empty())
    throw std::runtime_error("no training windows could be built from " + a.run.data);
  auto [train_w, val_w] =
      aqs::split_train_val(std::move(windows), a.run.cfg.seed, a.run.val_fraction);

  aqs::Checkpoint ck = aqs::transfer_train(base, train_w, val_w, a.run.cfg, &std::cout);

  std::filesystem::create_directories(a.run.out);
  const std::string ckpt_path = a.run.out + "/model.ckpt";
  aqs::save_checkpoint(ck, ckpt_path);

  KeyValues kv{{"input.base", a.base},
               {"input.data", a.run.data},
               {"lineage", ck.lineage},
               {"windows.train", std::to_string(train_w.size())},
               {"windows.val", std::to_string(val_w.size())},
               {"best_epoch", std::to_string(ck.best_epoch)},
               {"output.checkpoint", ckpt_path}};
  append_config(kv, ck.config);
  write_manifest(a.run.out, "transfer", std::move(kv), started);
  std::cout << "saved " << ckpt_path << " (lineage " << ck.lineage << ")\n";
  return 0;
}

// -------------------------------------------------------------- predict --

struct PredictArgs {
  std::string model;
  std::string data;
  std::string holidays;
  std::size_t max_gap = 5;
  std::string out;
};

int cmd_predict(const PredictArgs& a) {
  const auto started = std::chrono::steady_clock::now();
  aqs::Checkpoint ck = aqs::load_checkpoint(a.model);
  auto records = load_and_fill(a.data, a.max_gap);
  auto series = aqs::build_features(records, ck.features, maybe_holidays(a.holidays));

  const std::size_t t_enc = ck.model.dims.t_enc;
  const std::size_t horizon = ck.model.dims.horizon;
  const aqs::FeatureStats& stats = ck.features.stats.front();

  std::filesystem::create_directories(a.out);
  const std::string pred_path = a.out + "/predictions.csv";
  std::ofstream out(pred_path);
  if (!out) throw std::runtime_error("cannot write " + pred_path);
  out << "station_id,step,timestamp,predicted_aqi\n";

  std::size_t forecasts = 0;
  for (const auto& s : series) {
    // Forecast from the latest fully-usable encoder block of each station.
    if (s.rows.size() < t_enc) continue;
    const std::size_t start = s.rows.size() - t_enc;
    bool usable = true;
    for (std::size_t i = start; i < s.rows.size(); ++i) usable = usable && s.rows[i].usable;
    if (!usable) {
      std::cerr << "warning: station " << s.station_id
                << " has unrepaired gaps in its final window; skipped\n";
      continue;
    }

    aqs::WindowSample w;
    w.encoder = aqs::Matrix(t_enc, s.rows.front().values.size());
    for (std::size_t t = 0; t < t_enc; ++t)
      for (std::size_t j = 0; j < w.encoder.cols(); ++j)
        w.encoder(t, j) = s.rows[start + t].values[j];
    w.station_id = s.station_id;
    w.start_hour = s.start_hour + static_cast<std::int64_t>(start);

    auto preds = aqs::forward(ck.model, w, aqs::DecodeMode::autoregressive());
    for (std::size_t h = 0; h < preds.size(); ++h) {
      const std::int64_t hour = w.start_hour + static_cast<std::int64_t>(t_enc + h);
      out << s.station_id << ',' << h + 1 << ',' << aqs::format_hour_iso(hour) << ','
          << aqs::format_g17(aqs::denormalize_value(stats, preds[h])) << '\n';
    }
    ++forecasts;
  }
  if (forecasts == 0) throw std::runtime_error("no station had a usable final window");

  KeyValues kv{{"input.model", a.model},
               {"input.data", a.data},
               {"stations", std::to_string(forecasts)},
               {"horizon", std::to_string(horizon)},
               {"output.predictions", pred_path}};
  write_manifest(a.out, "predict", std::move(kv), started);
  std::cout << "wrote " << horizon << "-step forecasts for " << forecasts << " stations to "
            << pred_path << '\n';
  return 0;
}

// ------------------------------------------------------------- evaluate --

struct EvaluateArgs {
  std::string model;
  std::string data;
  std::string holidays;
  std::size_t horizon = 0;  // 0 = take the checkpoint's
  std::size_t window_stride = 1;
  std::size_t max_gap = 5;
  std::string out;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const auto started = std::chrono::steady_clock::now();
  aqs::Checkpoint ck = aqs::load_checkpoint(a.model);
  if (a.horizon != 0 && a.horizon != ck.model.dims.horizon)
    throw std::runtime_error("horizon " + std::to_string(a.horizon) +
                             " requested but the checkpoint decodes " +
                             std::to_string(ck.model.dims.horizon) + " steps");

  auto records = load_and_fill(a.data, a.max_gap);
  auto series = aqs::build_features(records, ck.features, maybe_holidays(a.holidays));
  auto windows = aqs::subsample_windows(
      aqs::make_windows(series, ck.model.dims.t_enc, ck.model.dims.horizon), a.window_stride);
  if (windows.empty()) throw std::runtime_error("no evaluation windows could be built from " + a.data);

  aqs::EvalResult result = aqs::evaluate(ck, windows);
  const double baseline = aqs::persistence_rmse(windows, ck.features);

  std::filesystem::create_directories(a.out);
  {
    std::ofstream out(a.out + "/evaluation.txt");
    out << "windows: " << windows.size() << '\n';
    out << "horizon: " << ck.model.dims.horizon << "h\n";
    out << "pooled_rmse: " << aqs::format_g17(result.rmse) << '\n';
    out << "persistence_rmse: " << aqs::format_g17(baseline) << '\n';
    for (std::size_t t = 0; t < result.per_step.size(); ++t)
      out << "step_" << t + 1 << "_rmse: " << aqs::format_g17(result.per_step[t]) << '\n';
  }
  {
    std::ofstream out(a.out + "/plot.csv");
    out << "timestamp,actual,predicted\n";
    for (const auto& p : result.series)
      out << aqs::format_hour_iso(p.hour) << ',' << aqs::format_g17(p.actual) << ','
          << aqs::format_g17(p.predicted) << '\n';
  }

  KeyValues kv{{"input.model", a.model},
               {"input.data", a.data},
               {"windows", std::to_string(windows.size())},
               {"pooled_rmse", aqs::format_g17(result.rmse)},
               {"persistence_rmse", aqs::format_g17(baseline)},
               {"output.evaluation", a.out + "/evaluation.txt"},
               {"output.plot", a.out + "/plot.csv"}};
  append_config(kv, ck.config);
  write_manifest(a.out, "evaluate", std::move(kv), started);
  std::cout << "pooled RMSE " << result.rmse << " over " << windows.size()
            << " windows (persistence " << baseline << ")\n";
  return 0;
}

// ----------------------------------------------------------- experiment --

struct ExperimentArgs {
  std::vector<std::string> train_files;
  std::string test_file;
  std::string holidays;
  std::vector<std::string> strategies{"tf", "joint"};
  std::vector<std::size_t> depths{1, 2};
  std::vector<std::string> losses{"mae", "mse"};
  std::vector<std::size_t> horizons{8, 12, 16, 20, 24};
  std::vector<std::string> drop;
  aqs::TrainConfig base;
  double val_fraction = 0.2;
  std::size_t window_stride = 1;
  std::size_t max_gap = 5;
  std::string variant = "paper_literal";
  std::string out;
};

int cmd_experiment(ExperimentArgs& a) {
  const auto started = std::chrono::steady_clock::now();
  a.base.variant = aqs::cell_variant_from_string(a.variant);

  aqs::GridSpec spec;
  for (const auto& s : a.strategies) spec.strategies.push_back(aqs::strategy_from_string(s));
  spec.depths = a.depths;
  for (const auto& l : a.losses) spec.losses.push_back(aqs::loss_kind_from_string(l));
  spec.horizons = a.horizons;
  spec.base = a.base;
  spec.val_fraction = a.val_fraction;
  spec.window_stride = a.window_stride;

  auto holidays = maybe_holidays(a.holidays);

  std::vector<std::vector<aqs::HourlyRecord>> train_records;
  for (const auto& path : a.train_files)
    train_records.push_back(load_and_fill(path, a.max_gap));
  auto test_records = load_and_fill(a.test_file, a.max_gap);

  std::vector<aqs::HourlyRecord> pooled;
  for (const auto& part : train_records) pooled.insert(pooled.end(), part.begin(), part.end());
  aqs::FeatureSpec features = aqs::FeatureSpec::from_records(pooled);
  if (!a.drop.empty()) features.drop_features(a.drop);
  std::vector<std::string> warnings;
  features = aqs::fit_normalization(pooled, std::move(features), &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';

  aqs::GridData data;
  data.dataset_id = a.train_files.back() + " | " + a.test_file;
  if (train_records.size() == 2)
    data.period1 = aqs::build_features(train_records[0], features, holidays);
  data.period2 = aqs::build_features(train_records.back(), features, holidays);
  data.test = aqs::build_features(test_records, features, holidays);
  data.features = features;

  aqs::GridResult result = aqs::experiment_grid(data, spec, &std::cout);
  aqs::emit_report(result, a.out);

  KeyValues kv{{"input.test", a.test_file},
               {"rows", std::to_string(result.table.rows.size())},
               {"horizons", std::to_string(spec.horizons.size())},
               {"window_stride", std::to_string(a.window_stride)},
               {"feature_dimension", std::to_string(features.dimension())},
               {"output.table", a.out + "/rmse_table.csv"},
               {"output.summary", a.out + "/summary.txt"}};
  for (std::size_t i = 0; i < a.train_files.size(); ++i)
    kv.emplace_back("input.train." + std::to_string(i), a.train_files[i]);
  append_config(kv, spec.base);
  write_manifest(a.out, "experiment", std::move(kv), started);
  std::cout << "wrote " << result.table.rows.size() << "x" << spec.horizons.size()
            << " RMSE table to " << a.out << "/rmse_table.csv\n";
  return 0;
}

// ------------------------------------------------------------ gradcheck --

struct GradCheckArgs {
  aqs::TrainConfig cfg;
  std::string loss = "mse";
  std::string variant = "paper_literal";
  std::string mode = "tf";
  double tolerance = 1e-5;
  std::string out;
};

int cmd_gradcheck(GradCheckArgs& a) {
  const auto started = std::chrono::steady_clock::now();
  a.cfg.loss = aqs::loss_kind_from_string(a.loss);
  a.cfg.variant = aqs::cell_variant_from_string(a.variant);
  aqs::DecodeKind kind;
  if (a.mode == "tf") kind = aqs::DecodeKind::TeacherForced;
  else if (a.mode == "ar") kind = aqs::DecodeKind::Autoregressive;
  else throw std::runtime_error("unknown mode '" + a.mode + "' (expected tf or ar)");

  aqs::GradCheckReport report = aqs::gradient_check(a.cfg, kind);
  for (const auto& e : report.per_tensor)
    std::cout << e.tensor << " max_rel_err " << e.max_rel_err << '\n';
  std::cout << "overall max_rel_err " << report.max_rel_err << " (tolerance " << a.tolerance
            << ")\n";

  if (!a.out.empty()) {
    std::filesystem::create_directories(a.out);
    std::ofstream out(a.out + "/gradcheck.txt");
    for (const auto& e : report.per_tensor)
      out << e.tensor << ' ' << aqs::format_g17(e.max_rel_err) << '\n';
    out << "overall " << aqs::format_g17(report.max_rel_err) << '\n';
    KeyValues kv{{"mode", a.mode},
                 {"tolerance", aqs::format_g17(a.tolerance)},
                 {"max_rel_err", aqs::format_g17(report.max_rel_err)},
                 {"output.report", a.out + "/gradcheck.txt"}};
    append_config(kv, a.cfg);
    write_manifest(a.out, "gradcheck", std::move(kv), started);
  }

  if (report.max_rel_err >= a.tolerance) {
    std::cerr << "gradient check FAILED: " << report.max_rel_err << " >= " << a.tolerance << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hourly air-quality sequence forecaster"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_config("--config", "", "Read defaults from an INI file (flags take precedence)");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic hourly dataset");
  synth_cmd->add_option("--seed", synth.seed, "Generation seed")->required();
  synth_cmd->add_option("--hours", synth.hours, "Hours to generate")->capture_default_str();
  synth_cmd
      ->add_option("--profile", synth.profile,
                   "plain, seasonal, upstream or two-regime (two-regime shifts the level at "
                   "the midpoint of the generated span)")
      ->capture_default_str();
  synth_cmd->add_option("--start", synth.start, "First hour (ISO-8601)")->capture_default_str();
  synth_cmd->add_option("--station", synth.station, "Station id")->capture_default_str();
  synth_cmd->add_option("--noise", synth.noise, "Noise sigma override (AQI units)");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();

  PrepareArgs prepare;
  auto* prepare_cmd =
      app.add_subcommand("prepare", "Ingest, join and repair raw hourly CSV data");
  prepare_cmd->add_option("--aqi", prepare.aqi, "AQI measurements CSV")->required();
  prepare_cmd->add_option("--weather", prepare.weather, "Weather CSV to inner-join on");
  prepare_cmd->add_option("--holidays", prepare.holidays, "Holiday date file");
  prepare_cmd->add_option("--max-gap", prepare.max_gap, "Longest interpolated gap, hours")
      ->capture_default_str();
  prepare_cmd->add_option("--out", prepare.out, "Output directory")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a forecaster from scratch");
  add_run_flags(train_cmd, train, true);

  TransferArgs transfer;
  auto* transfer_cmd = app.add_subcommand(
      "transfer", "Continue training a saved model on new data (fresh optimizer)");
  transfer_cmd->add_option("--base", transfer.base, "Base checkpoint to continue from")
      ->required();
  add_run_flags(transfer_cmd, transfer.run, false);

  PredictArgs predict;
  auto* predict_cmd =
      app.add_subcommand("predict", "Forecast each station's next hours from its latest window");
  predict_cmd->add_option("--model", predict.model, "Checkpoint file")->required();
  predict_cmd->add_option("--data", predict.data, "Recent observations CSV")->required();
  predict_cmd->add_option("--holidays", predict.holidays, "Holiday date file");
  predict_cmd->add_option("--max-gap", predict.max_gap, "Longest interpolated gap, hours")
      ->capture_default_str();
  predict_cmd->add_option("--out", predict.out, "Output directory")->required();

  EvaluateArgs evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Measure horizon RMSE on labelled data");
  evaluate_cmd->add_option("--model", evaluate.model, "Checkpoint file")->required();
  evaluate_cmd->add_option("--data", evaluate.data, "Test dataset CSV")->required();
  evaluate_cmd->add_option("--holidays", evaluate.holidays, "Holiday date file");
  evaluate_cmd->add_option("--horizon", evaluate.horizon,
                           "Expected horizon; must match the checkpoint (0 = use checkpoint's)");
  evaluate_cmd
      ->add_option("--window-stride", evaluate.window_stride, "Keep every k-th test window")
      ->capture_default_str();
  evaluate_cmd->add_option("--max-gap", evaluate.max_gap, "Longest interpolated gap, hours")
      ->capture_default_str();
  evaluate_cmd->add_option("--out", evaluate.out, "Output directory")->required();

  ExperimentArgs experiment;
  auto* experiment_cmd = app.add_subcommand(
      "experiment", "Train and evaluate the full strategy/depth/loss/horizon grid");
  experiment_cmd
      ->add_option("--train", experiment.train_files,
                   "Training CSV, or two CSVs (period1,period2) to enable the transfer strategy")
      ->required()
      ->delimiter(',')
      ->expected(1, 2);
  experiment_cmd->add_option("--test", experiment.test_file, "Held-out test CSV")->required();
  experiment_cmd->add_option("--holidays", experiment.holidays, "Holiday date file");
  experiment_cmd->add_option("--strategies", experiment.strategies, "tf and/or joint")
      ->delimiter(',')
      ->capture_default_str();
  experiment_cmd->add_option("--depths", experiment.depths, "Stack depths")
      ->delimiter(',')
      ->capture_default_str();
  experiment_cmd->add_option("--losses", experiment.losses, "mae and/or mse")
      ->delimiter(',')
      ->capture_default_str();
  experiment_cmd->add_option("--horizons", experiment.horizons, "Decode horizons, hours")
      ->delimiter(',')
      ->capture_default_str();
  experiment_cmd
      ->add_option("--drop-features", experiment.drop, "Feature columns to remove (ablation)")
      ->delimiter(',');
  experiment_cmd->add_option("--seed", experiment.base.seed, "Grid seed")->required();
  experiment_cmd->add_option("--epochs", experiment.base.epochs, "Epochs per cell")
      ->capture_default_str();
  experiment_cmd->add_option("--batch", experiment.base.batch_size, "Mini-batch size")
      ->capture_default_str();
  experiment_cmd->add_option("--lr", experiment.base.lr, "ADAM learning rate")
      ->capture_default_str();
  experiment_cmd->add_option("--hidden", experiment.base.hidden, "Hidden state size")
      ->capture_default_str();
  experiment_cmd->add_option("--t-enc", experiment.base.t_enc, "Encoder window length")
      ->capture_default_str();
  experiment_cmd->add_option("--clip", experiment.base.clip_norm, "Gradient clip norm")
      ->capture_default_str();
  experiment_cmd->add_option("--patience", experiment.base.patience, "Early-stop patience")
      ->capture_default_str();
  experiment_cmd->add_option("--variant", experiment.variant, "Cell wiring")
      ->capture_default_str();
  experiment_cmd->add_option("--val-fraction", experiment.val_fraction, "Validation fraction")
      ->capture_default_str();
  experiment_cmd
      ->add_option("--window-stride", experiment.window_stride, "Keep every k-th window")
      ->capture_default_str();
  experiment_cmd->add_option("--max-gap", experiment.max_gap, "Longest interpolated gap, hours")
      ->capture_default_str();
  experiment_cmd->add_option("--out", experiment.out, "Output directory")->required();

  GradCheckArgs gradcheck;
  gradcheck.cfg.hidden = 3;
  gradcheck.cfg.depth = 1;
  gradcheck.cfg.t_enc = 4;
  gradcheck.cfg.horizon = 2;
  gradcheck.cfg.seed = 1;
  auto* gradcheck_cmd = app.add_subcommand(
      "gradcheck", "Compare analytic gradients against finite differences on a tiny model");
  gradcheck_cmd->add_option("--seed", gradcheck.cfg.seed, "Model/window seed")
      ->capture_default_str();
  gradcheck_cmd->add_option("--hidden", gradcheck.cfg.hidden, "Hidden size")
      ->capture_default_str();
  gradcheck_cmd->add_option("--depth", gradcheck.cfg.depth, "Stack depth")->capture_default_str();
  gradcheck_cmd->add_option("--t-enc", gradcheck.cfg.t_enc, "Encoder steps")
      ->capture_default_str();
  gradcheck_cmd->add_option("--horizon", gradcheck.cfg.horizon, "Decode steps")
      ->capture_default_str();
  gradcheck_cmd->add_option("--loss", gradcheck.loss, "mae or mse")->capture_default_str();
  gradcheck_cmd->add_option("--variant", gradcheck.variant, "Cell wiring")
      ->capture_default_str();
  gradcheck_cmd->add_option("--mode", gradcheck.mode, "tf (teacher-forced) or ar")
      ->capture_default_str();
  gradcheck_cmd->add_option("--tolerance", gradcheck.tolerance, "Max relative error accepted")
      ->capture_default_str();
  gradcheck_cmd->add_option("--out", gradcheck.out, "Optional report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*synth_cmd) return cmd_synth(synth);
    if (*prepare_cmd) return cmd_prepare(prepare);
    if (*train_cmd) return cmd_train(train);
    if (*transfer_cmd) return cmd_transfer(transfer);
    if (*predict_cmd) return cmd_predict(predict);
    if (*evaluate_cmd) return cmd_evaluate(evaluate);
    if (*experiment_cmd) return cmd_experiment(experiment);
    if (*gradcheck_cmd) return cmd_gradcheck(gradcheck);
  } catch (const std::exception& e) {
    std::cerr << "aqs: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
