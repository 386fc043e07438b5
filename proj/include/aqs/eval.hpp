#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "aqs/train.hpp"

namespace aqs {

struct PlotPoint {
  std::int64_t hour = 0;
  double actual = 0.0;
  double predicted = 0.0;
};

// Horizon evaluation in denormalized AQI units. The headline RMSE pools all
// windows and all decoded steps; per_step breaks the same errors down by
// decode position. series carries each window's final decoded step for
// plotting.
struct EvalResult {
  double rmse = 0.0;
  std::vector<double> per_step;
  std::vector<PlotPoint> series;
};

// Autoregressive evaluation of a checkpoint on test windows built with its
// t_enc and horizon. Predictions and targets are denormalized with the
// checkpoint's target stats before any error is computed.
EvalResult evaluate(const Checkpoint& ck, const std::vector<WindowSample>& test,
                    std::size_t batch_size = 64);

// Naive forecaster: repeat each window's last observed AQI value across the
// whole horizon. Same pooled RMSE definition as evaluate.
double persistence_rmse(const std::vector<WindowSample>& test, const FeatureSpec& features);

// Training regime for a grid row: pre-train on period 1 and continue on
// period 2 (Transfer), or train once on both periods pooled (Joint).
enum class Strategy { Transfer, Joint };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct GridData {
  std::string dataset_id;
  std::vector<StationSeries> period1;  // may be empty (forbids Transfer rows)
  std::vector<StationSeries> period2;
  std::vector<StationSeries> test;
  FeatureSpec features;
};

struct GridSpec {
  std::vector<Strategy> strategies;
  std::vector<std::size_t> depths;
  std::vector<LossKind> losses;
  std::vector<std::size_t> horizons;
  TrainConfig base;  // shared run settings; depth, loss, horizon and seed are set per cell
  double val_fraction = 0.2;
  std::size_t window_stride = 1;  // keep every k-th window (desk-scale lever)
};

struct RmseTable {
  std::string dataset_id;
  std::uint64_t seed = 0;
  std::vector<std::size_t> horizons;
  struct Row {
    std::string label;  // e.g. "TF + RNN + MAE"
    std::vector<double> cells;
    std::vector<std::string> fingerprints;
  };
  std::vector<Row> rows;
};

struct GridResult {
  RmseTable table;
  std::map<std::size_t, std::vector<PlotPoint>> plots;  // first row's series per horizon
};

// Trains one model per (setting row, horizon) cell and evaluates it on the
// test segment. Row order: losses outermost, then strategies, then depths.
// Every cell derives its own seed from the base seed and the cell key, so a
// sub-grid reproduces the matching cells of the full grid.
GridResult experiment_grid(const GridData& data, const GridSpec& spec, std::ostream* log = nullptr);

// Writes rmse_table.csv (wide, 17 significant digits), summary.txt
// (human-readable, 2 decimals) and plot_h<H>.csv files into out_dir.
void emit_report(const GridResult& result, const std::string& out_dir);

}  // namespace aqs
