#include <algorithm>
#include <cmath>
#include <filesystem>

#include "aqs/eval.hpp"
#include "doctest.h"
#include "testutil.hpp"

using aqs::Checkpoint;
using aqs::Matrix;
using aqs::WindowSample;
using testutil::TempDir;

namespace {

// Checkpoint whose model emits a constant (the output bias) for every step —
// predictions are then known exactly without running real training.
Checkpoint constant_model_checkpoint(double value, std::size_t t_enc, std::size_t horizon,
                                     const aqs::FeatureSpec& spec) {
  Checkpoint ck;
  ck.config.hidden = 3;
  ck.config.depth = 1;
  ck.config.t_enc = t_enc;
  ck.config.horizon = horizon;
  aqs::ModelDims dims;
  dims.input = spec.dimension();
  dims.hidden = 3;
  dims.depth = 1;
  dims.t_enc = t_enc;
  dims.horizon = horizon;
  ck.model = aqs::init_model(1, dims, aqs::CellVariant::PaperLiteral);
  aqs::for_each_param(ck.model, [](const std::string&, Matrix& t) {
    std::fill(t.data(), t.data() + t.size(), 0.0);
  });
  ck.model.b_out(0, 0) = value;
  ck.features = spec;
  return ck;
}

WindowSample window_with_targets(std::vector<double> targets, std::size_t t_enc, std::size_t dim,
                                 double last_value, std::int64_t start_hour = 0) {
  WindowSample w;
  w.encoder = Matrix(t_enc, dim);
  w.encoder(t_enc - 1, 0) = last_value;
  w.target = std::move(targets);
  w.station_id = "A";
  w.start_hour = start_hour;
  return w;
}

}  // namespace

TEST_CASE("pooled error of a single window matches the hand calculation") {
  auto spec = testutil::identity_spec({"pm25_aqi", "f"});
  Checkpoint ck = constant_model_checkpoint(0.0, 4, 2, spec);
  std::vector<WindowSample> test{window_with_targets({3.0, 4.0}, 4, spec.dimension(), 0.0)};

  aqs::EvalResult r = aqs::evaluate(ck, test);
  CHECK(r.rmse == doctest::Approx(3.5355339059327378).epsilon(1e-14));
  REQUIRE(r.per_step.size() == 2);
  CHECK(r.per_step[0] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(r.per_step[1] == doctest::Approx(4.0).epsilon(1e-14));

  // The plot series carries the final decoded step of the window.
  REQUIRE(r.series.size() == 1);
  CHECK(r.series[0].hour == 0 + 4 + 2 - 1);
  CHECK(r.series[0].actual == 4.0);
  CHECK(r.series[0].predicted == 0.0);
}

TEST_CASE("denormalization happens before errors are measured") {
  auto spec = testutil::identity_spec({"pm25_aqi", "f"});
  spec.stats[0] = {100.0, 25.0};  // normalized 0 denormalizes to 100
  Checkpoint ck = constant_model_checkpoint(0.0, 4, 1, spec);
  // Normalized target 2.0 denormalizes to 150; prediction denormalizes to 100.
  std::vector<WindowSample> test{window_with_targets({2.0}, 4, spec.dimension(), 0.0)};
  aqs::EvalResult r = aqs::evaluate(ck, test);
  CHECK(r.rmse == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(r.series[0].actual == doctest::Approx(150.0).epsilon(1e-12));
  CHECK(r.series[0].predicted == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("pooled squared error is the mean of the per-step squares") {
  auto spec = testutil::identity_spec({"pm25_aqi", "a", "b"});
  aqs::ModelDims dims;
  dims.input = spec.dimension();
  dims.hidden = 4;
  dims.depth = 2;
  dims.t_enc = 5;
  dims.horizon = 3;
  Checkpoint ck;
  ck.config.t_enc = 5;
  ck.config.horizon = 3;
  ck.model = aqs::init_model(23, dims, aqs::CellVariant::StandardCandidate);
  ck.features = spec;

  auto test = testutil::random_windows(7, 5, 3, spec.dimension(), 71);
  aqs::EvalResult r = aqs::evaluate(ck, test, 3);  // exercise several batches
  double mean_sq = 0.0;
  for (double s : r.per_step) mean_sq += s * s;
  mean_sq /= static_cast<double>(r.per_step.size());
  CHECK(r.rmse * r.rmse == doctest::Approx(mean_sq).epsilon(1e-12));
  CHECK(r.series.size() == 7);

  // Identical inputs evaluate identically regardless of batch size.
  aqs::EvalResult r2 = aqs::evaluate(ck, test, 64);
  CHECK(r.rmse == r2.rmse);
}

TEST_CASE("persistence baseline repeats the last observation") {
  auto spec = testutil::identity_spec({"pm25_aqi", "f"});

  // Linear ramp with unit slope: step errors 1..8.
  std::vector<double> ramp(8);
  for (int i = 0; i < 8; ++i) ramp[i] = 1.0 + i;
  std::vector<WindowSample> test{window_with_targets(ramp, 4, spec.dimension(), 0.0)};
  CHECK(aqs::persistence_rmse(test, spec) == doctest::Approx(std::sqrt(25.5)).epsilon(1e-14));
  CHECK(aqs::persistence_rmse(test, spec) == doctest::Approx(5.049752469181039).epsilon(1e-14));

  // A perfectly flat continuation has zero persistence error.
  std::vector<WindowSample> flat{window_with_targets({0.7, 0.7}, 4, spec.dimension(), 0.7)};
  CHECK(aqs::persistence_rmse(flat, spec) == doctest::Approx(0.0).epsilon(1e-14));

  // Denormalization scales the ramp errors by the target spread.
  auto scaled = testutil::identity_spec({"pm25_aqi", "f"});
  scaled.stats[0] = {0.0, 2.0};
  CHECK(aqs::persistence_rmse(test, scaled) ==
        doctest::Approx(2.0 * std::sqrt(25.5)).epsilon(1e-12));

  CHECK_THROWS(aqs::persistence_rmse({}, spec));
}

TEST_CASE("evaluation rejects mismatched geometry") {
  auto spec = testutil::identity_spec({"pm25_aqi", "f"});
  Checkpoint ck = constant_model_checkpoint(0.0, 4, 2, spec);
  auto short_enc = testutil::random_windows(1, 3, 2, spec.dimension(), 7);
  CHECK_THROWS(aqs::evaluate(ck, short_enc));
  auto long_h = testutil::random_windows(1, 4, 5, spec.dimension(), 8);
  CHECK_THROWS(aqs::evaluate(ck, long_h));
  CHECK_THROWS(aqs::evaluate(ck, {}));
}

TEST_CASE("strategy names round-trip") {
  CHECK(aqs::to_string(aqs::Strategy::Transfer) == "TF");
  CHECK(aqs::to_string(aqs::Strategy::Joint) == "Joint");
  CHECK(aqs::strategy_from_string("tf") == aqs::Strategy::Transfer);
  CHECK(aqs::strategy_from_string("transfer") == aqs::Strategy::Transfer);
  CHECK(aqs::strategy_from_string("joint") == aqs::Strategy::Joint);
  CHECK_THROWS(aqs::strategy_from_string("ensemble"));
}

namespace {

// Small two-period synthetic grid fixture shared by the grid tests.
struct GridFixture {
  aqs::GridData data;

  explicit GridFixture(std::uint64_t seed = 4) {
    aqs::SynthProfile profile = aqs::SynthProfile::named("seasonal");
    auto p1 = aqs::synth_generate(seed, 400, profile);
    aqs::SynthProfile later = profile;
    later.start_hour += 400;
    auto p2 = aqs::synth_generate(seed + 1, 400, later);
    aqs::SynthProfile test_p = profile;
    test_p.start_hour += 800;
    auto pt = aqs::synth_generate(seed + 2, 300, test_p);

    std::vector<aqs::HourlyRecord> pooled = p1;
    pooled.insert(pooled.end(), p2.begin(), p2.end());
    aqs::FeatureSpec spec = aqs::FeatureSpec::from_records(pooled);
    spec = aqs::fit_normalization(pooled, std::move(spec), nullptr);

    data.dataset_id = "two-period-synth";
    data.period1 = aqs::build_features(p1, spec, {});
    data.period2 = aqs::build_features(p2, spec, {});
    data.test = aqs::build_features(pt, spec, {});
    data.features = spec;
  }
};

aqs::GridSpec small_spec() {
  aqs::GridSpec spec;
  spec.strategies = {aqs::Strategy::Transfer, aqs::Strategy::Joint};
  spec.depths = {1, 2};
  spec.losses = {aqs::LossKind::MAE, aqs::LossKind::MSE};
  spec.horizons = {4, 6};
  spec.base.epochs = 1;
  spec.base.hidden = 4;
  spec.base.t_enc = 8;
  spec.base.batch_size = 16;
  spec.base.seed = 90;
  spec.window_stride = 9;
  return spec;
}

}  // namespace

TEST_CASE("experiment grid emits the full labelled table") {
  GridFixture fx;
  aqs::GridSpec spec = small_spec();
  aqs::GridResult result = aqs::experiment_grid(fx.data, spec);

  REQUIRE(result.table.rows.size() == 8);
  REQUIRE(result.table.horizons == std::vector<std::size_t>{4, 6});
  // Losses outermost, then strategies, then depths.
  CHECK(result.table.rows[0].label == "TF + RNN + MAE");
  CHECK(result.table.rows[1].label == "TF + RNNs + MAE");
  CHECK(result.table.rows[2].label == "Joint + RNN + MAE");
  CHECK(result.table.rows[3].label == "Joint + RNNs + MAE");
  CHECK(result.table.rows[4].label == "TF + RNN + MSE");
  CHECK(result.table.rows[5].label == "TF + RNNs + MSE");
  CHECK(result.table.rows[6].label == "Joint + RNN + MSE");
  CHECK(result.table.rows[7].label == "Joint + RNNs + MSE");

  for (const auto& row : result.table.rows) {
    REQUIRE(row.cells.size() == 2);
    REQUIRE(row.fingerprints.size() == 2);
    for (double v : row.cells) {
      CHECK(std::isfinite(v));
      CHECK(v > 0.0);
    }
    for (const auto& fp : row.fingerprints) CHECK(fp.size() == 16);
  }

  // Plots exist for every horizon and come from the first row.
  REQUIRE(result.plots.size() == 2);
  CHECK(result.plots.count(4) == 1);
  CHECK(result.plots.count(6) == 1);
  CHECK(!result.plots.at(4).empty());

  SUBCASE("a sub-grid reproduces the matching cells of the full grid") {
    aqs::GridSpec sub = spec;
    sub.losses = {aqs::LossKind::MSE};
    sub.strategies = {aqs::Strategy::Joint};
    sub.depths = {2};
    sub.horizons = {6};
    aqs::GridResult part = aqs::experiment_grid(fx.data, sub);
    REQUIRE(part.table.rows.size() == 1);
    CHECK(part.table.rows[0].label == "Joint + RNNs + MSE");
    CHECK(part.table.rows[0].cells[0] == result.table.rows[7].cells[1]);
    CHECK(part.table.rows[0].fingerprints[0] == result.table.rows[7].fingerprints[1]);
  }
  SUBCASE("the grid is deterministic end to end") {
    aqs::GridResult again = aqs::experiment_grid(fx.data, spec);
    for (std::size_t r = 0; r < 8; ++r)
      for (std::size_t h = 0; h < 2; ++h)
        CHECK(again.table.rows[r].cells[h] == result.table.rows[r].cells[h]);
  }
}

TEST_CASE("transfer rows require a first period") {
  GridFixture fx;
  fx.data.period1.clear();
  aqs::GridSpec spec = small_spec();
  CHECK_THROWS_WITH_AS(aqs::experiment_grid(fx.data, spec), doctest::Contains("first-period"),
                       std::invalid_argument);

  // Joint-only grids run fine without one.
  spec.strategies = {aqs::Strategy::Joint};
  spec.losses = {aqs::LossKind::MAE};
  spec.depths = {1};
  spec.horizons = {4};
  aqs::GridResult r = aqs::experiment_grid(fx.data, spec);
  CHECK(r.table.rows.size() == 1);
}

TEST_CASE("grid validates its axes") {
  GridFixture fx;
  aqs::GridSpec spec = small_spec();
  SUBCASE("no strategies") {
    spec.strategies.clear();
    CHECK_THROWS(aqs::experiment_grid(fx.data, spec));
  }
  SUBCASE("no horizons") {
    spec.horizons.clear();
    CHECK_THROWS(aqs::experiment_grid(fx.data, spec));
  }
  SUBCASE("no losses") {
    spec.losses.clear();
    CHECK_THROWS(aqs::experiment_grid(fx.data, spec));
  }
  SUBCASE("no depths") {
    spec.depths.clear();
    CHECK_THROWS(aqs::experiment_grid(fx.data, spec));
  }
}

TEST_CASE("report files are written and stable") {
  GridFixture fx;
  aqs::GridSpec spec = small_spec();
  spec.strategies = {aqs::Strategy::Joint};
  spec.depths = {1};
  spec.losses = {aqs::LossKind::MAE};
  aqs::GridResult result = aqs::experiment_grid(fx.data, spec);

  TempDir dir("report");
  aqs::emit_report(result, dir.file("out"));
  const std::string table_path = dir.file("out") + "/rmse_table.csv";
  const std::string summary_path = dir.file("out") + "/summary.txt";
  REQUIRE(std::filesystem::exists(table_path));
  REQUIRE(std::filesystem::exists(summary_path));
  REQUIRE(std::filesystem::exists(dir.file("out") + "/plot_h4.csv"));
  REQUIRE(std::filesystem::exists(dir.file("out") + "/plot_h6.csv"));

  std::string table = testutil::read_file(table_path);
  CHECK(table.find("setting,h4,h6") == 0);
  CHECK(table.find("Joint + RNN + MAE,") != std::string::npos);
  std::string summary = testutil::read_file(summary_path);
  CHECK(summary.find("Joint + RNN + MAE, 4h,") != std::string::npos);
  CHECK(summary.find("fingerprints") != std::string::npos);

  std::string plot = testutil::read_file(dir.file("out") + "/plot_h4.csv");
  CHECK(plot.find("timestamp,actual,predicted") == 0);

  // Re-emitting produces byte-identical artifacts.
  aqs::emit_report(result, dir.file("out2"));
  CHECK(testutil::read_file(dir.file("out2") + "/rmse_table.csv") == table);
  CHECK(testutil::read_file(dir.file("out2") + "/summary.txt") == summary);
}
