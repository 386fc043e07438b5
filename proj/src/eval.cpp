#include "aqs/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "aqs/rng.hpp"

namespace aqs {
namespace {

const FeatureStats& target_stats(const FeatureSpec& features, const char* who) {
  if (!features.fitted() || features.numeric_names.empty())
    throw std::invalid_argument(std::string(who) + ": feature spec carries no target stats");
  return features.stats.front();
}

void check_test_windows(const std::vector<WindowSample>& test, std::size_t t_enc,
                        std::size_t horizon, std::size_t input_dim) {
  for (const auto& w : test) {
    if (w.encoder.rows() != t_enc)
      throw std::invalid_argument("evaluate: window length " + std::to_string(w.encoder.rows()) +
                                  " does not match checkpoint t_enc " + std::to_string(t_enc));
    if (w.encoder.cols() != input_dim)
      throw std::invalid_argument("evaluate: window feature dimension " +
                                  std::to_string(w.encoder.cols()) +
                                  " does not match checkpoint input size " +
                                  std::to_string(input_dim));
    if (w.target.size() != horizon)
      throw std::invalid_argument("evaluate: window horizon " + std::to_string(w.target.size()) +
                                  " does not match checkpoint horizon " +
                                  std::to_string(horizon));
  }
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char byte : text) {
    hash ^= byte;
    hash *= 1099511628211ULL;
  }
  return hash;
}

}  // namespace

EvalResult evaluate(const Checkpoint& ck, const std::vector<WindowSample>& test,
                    std::size_t batch_size) {
  if (test.empty()) throw std::invalid_argument("evaluate: no test windows");
  if (batch_size == 0) throw std::invalid_argument("evaluate: batch_size must be at least 1");
  const std::size_t horizon = ck.model.dims.horizon;
  const std::size_t t_enc = ck.model.dims.t_enc;
  check_test_windows(test, t_enc, horizon, ck.model.dims.input);
  const FeatureStats& stats = target_stats(ck.features, "evaluate");

  EvalResult result;
  result.per_step.assign(horizon, 0.0);
  result.series.reserve(test.size());
  std::vector<double> step_sq(horizon, 0.0);

  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < test.size(); start += batch_size) {
    const std::size_t end = std::min(test.size(), start + batch_size);
    idx.resize(end - start);
    for (std::size_t i = start; i < end; ++i) idx[i - start] = i;

    Batch batch = make_batch(test, idx);
    auto preds = forward_batch(ck.model, batch, DecodeKind::Autoregressive);

    for (std::size_t j = 0; j < batch.size; ++j) {
      const WindowSample& w = test[idx[j]];
      for (std::size_t t = 0; t < horizon; ++t) {
        const double pred = denormalize_value(stats, preds[t](0, j));
        const double actual = denormalize_value(stats, w.target[t]);
        const double err = pred - actual;
        step_sq[t] += err * err;
        if (t + 1 == horizon) {
          result.series.push_back(
              {w.start_hour + static_cast<std::int64_t>(t_enc + t), actual, pred});
        }
      }
    }
  }

  const double n = static_cast<double>(test.size());
  double total_sq = 0.0;
  for (std::size_t t = 0; t < horizon; ++t) {
    total_sq += step_sq[t];
    result.per_step[t] = std::sqrt(step_sq[t] / n);
  }
  result.rmse = std::sqrt(total_sq / (n * static_cast<double>(horizon)));
  return result;
}

double persistence_rmse(const std::vector<WindowSample>& test, const FeatureSpec& features) {
  if (test.empty()) throw std::invalid_argument("persistence_rmse: no windows");
  const FeatureStats& stats = target_stats(features, "persistence_rmse");

  double total_sq = 0.0;
  std::size_t count = 0;
  for (const auto& w : test) {
    const double last = denormalize_value(stats, w.encoder(w.encoder.rows() - 1, 0));
    for (double t : w.target) {
      const double err = last - denormalize_value(stats, t);
      total_sq += err * err;
      ++count;
    }
  }
  return std::sqrt(total_sq / static_cast<double>(count));
}

std::string to_string(Strategy s) { return s == Strategy::Transfer ? "TF" : "Joint"; }

Strategy strategy_from_string(const std::string& s) {
  if (s == "tf" || s == "TF" || s == "transfer") return Strategy::Transfer;
  if (s == "joint" || s == "Joint") return Strategy::Joint;
  throw std::invalid_argument("unknown strategy '" + s + "' (expected tf or joint)");
}

GridResult experiment_grid(const GridData& data, const GridSpec& spec, std::ostream* log) {
  if (spec.strategies.empty() || spec.depths.empty() || spec.losses.empty() ||
      spec.horizons.empty())
    throw std::invalid_argument("experiment grid: strategies, depths, losses and horizons must "
                                "all be non-empty");
  if (data.period2.empty()) throw std::invalid_argument("experiment grid: no training data");
  if (data.test.empty()) throw std::invalid_argument("experiment grid: no test data");
  const bool wants_transfer =
      std::find(spec.strategies.begin(), spec.strategies.end(), Strategy::Transfer) !=
      spec.strategies.end();
  if (wants_transfer && data.period1.empty())
    throw std::invalid_argument(
        "experiment grid: transfer strategy requires a first-period dataset");

  GridResult result;
  result.table.dataset_id = data.dataset_id;
  result.table.seed = spec.base.seed;
  result.table.horizons = spec.horizons;

  for (LossKind loss : spec.losses) {
    for (Strategy strategy : spec.strategies) {
      for (std::size_t depth : spec.depths) {
        RmseTable::Row row;
        row.label = to_string(strategy) + " + " + (depth == 1 ? "RNN" : "RNNs") + " + " +
                    (loss == LossKind::MAE ? "MAE" : "MSE");

        for (std::size_t horizon : spec.horizons) {
          const std::uint64_t cell_seed =
              mix_seed(spec.base.seed, fnv1a64(row.label + "@" + std::to_string(horizon)));

          TrainConfig cfg = spec.base;
          cfg.depth = depth;
          cfg.loss = loss;
          cfg.horizon = horizon;
          cfg.seed = cell_seed;

          auto windows2 = subsample_windows(make_windows(data.period2, cfg.t_enc, horizon),
                                            spec.window_stride);
          auto test_w = subsample_windows(make_windows(data.test, cfg.t_enc, horizon),
                                          spec.window_stride);

          Checkpoint ck;
          if (strategy == Strategy::Transfer) {
            auto windows1 = subsample_windows(make_windows(data.period1, cfg.t_enc, horizon),
                                              spec.window_stride);
            auto [tr1, val1] =
                split_train_val(std::move(windows1), mix_seed(cell_seed, 11), spec.val_fraction);
            Checkpoint base = train(tr1, val1, cfg, data.features);

            auto [tr2, val2] =
                split_train_val(std::move(windows2), mix_seed(cell_seed, 12), spec.val_fraction);
            TrainConfig cfg2 = cfg;
            cfg2.seed = mix_seed(cell_seed, 13);
            ck = transfer_train(base, tr2, val2, cfg2);
          } else {
            auto windows1 =
                data.period1.empty()
                    ? std::vector<WindowSample>{}
                    : subsample_windows(make_windows(data.period1, cfg.t_enc, horizon),
                                        spec.window_stride);
            for (auto& w : windows2) windows1.push_back(std::move(w));
            auto [tr, val] =
                split_train_val(std::move(windows1), mix_seed(cell_seed, 11), spec.val_fraction);
            ck = train(tr, val, cfg, data.features);
          }

          EvalResult cell = evaluate(ck, test_w);
          row.cells.push_back(cell.rmse);
          row.fingerprints.push_back(config_fingerprint(ck.config));
          if (result.table.rows.empty()) result.plots[horizon] = std::move(cell.series);

          if (log)
            *log << "cell " << row.label << " @ " << horizon << "h rmse " << cell.rmse << '\n';
        }
        result.table.rows.push_back(std::move(row));
      }
    }
  }
  return result;
}

void emit_report(const GridResult& result, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const RmseTable& table = result.table;

  {
    std::ofstream out(out_dir + "/rmse_table.csv");
    if (!out) throw std::runtime_error("emit_report: cannot open " + out_dir + "/rmse_table.csv");
    out << "setting";
    for (std::size_t h : table.horizons) out << ",h" << h;
    out << '\n';
    for (const auto& row : table.rows) {
      out << row.label;
      for (double v : row.cells) out << ',' << format_g17(v);
      out << '\n';
    }
    if (!out) throw std::runtime_error("emit_report: write failed for rmse_table.csv");
  }

  {
    std::ofstream out(out_dir + "/summary.txt");
    if (!out) throw std::runtime_error("emit_report: cannot open " + out_dir + "/summary.txt");
    out << "dataset: " << table.dataset_id << '\n';
    out << "seed: " << table.seed << '\n';
    out << "pooled horizon RMSE, denormalized AQI units\n\n";
    char buf[64];
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < table.horizons.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.2f", row.cells.at(i));
        out << row.label << ", " << table.horizons[i] << "h, " << buf << '\n';
      }
    }
    out << "\nconfig fingerprints\n";
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < table.horizons.size(); ++i)
        out << row.label << ", " << table.horizons[i] << "h, " << row.fingerprints.at(i) << '\n';
    }
  }

  for (const auto& [horizon, series] : result.plots) {
    const std::string path = out_dir + "/plot_h" + std::to_string(horizon) + ".csv";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_report: cannot open " + path);
    out << "timestamp,actual,predicted\n";
    for (const PlotPoint& p : series)
      out << format_hour_iso(p.hour) << ',' << format_g17(p.actual) << ','
          << format_g17(p.predicted) << '\n';
  }
}

}  // namespace aqs
