// Acceptance gate: ten end-to-end checks with pinned tolerances. Each prints
// exactly one [PASS]/[FAIL] line with the measured numbers; the process exits
// non-zero if any check fails. Runs the library directly except for the grid
// check, which drives the installed command-line binary.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "aqs/data.hpp"
#include "aqs/eval.hpp"
#include "aqs/lstm.hpp"
#include "aqs/matrix.hpp"
#include "aqs/optim.hpp"
#include "aqs/rng.hpp"
#include "aqs/seq2seq.hpp"
#include "aqs/train.hpp"
#include "testutil.hpp"

#ifndef AQS_CLI_PATH
#error "AQS_CLI_PATH must point at the aqs executable"
#endif

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream ss;
  ss.precision(precision);
  ss << v;
  return ss.str();
}

// ---------------------------------------------------------------- helpers --

aqs::LstmParams zero_cell(std::size_t hidden, std::size_t input) {
  aqs::LstmParams p;
  p.w_xi = aqs::Matrix(hidden, input);
  p.w_hi = aqs::Matrix(hidden, hidden);
  p.b_i = aqs::Matrix(hidden, 1);
  p.w_xf = aqs::Matrix(hidden, input);
  p.w_hf = aqs::Matrix(hidden, hidden);
  p.b_f = aqs::Matrix(hidden, 1);
  p.w_xo = aqs::Matrix(hidden, input);
  p.w_ho = aqs::Matrix(hidden, hidden);
  p.b_o = aqs::Matrix(hidden, 1);
  p.w_xg = aqs::Matrix(hidden, input);
  p.w_hg = aqs::Matrix(hidden, hidden);
  p.b_g = aqs::Matrix(hidden, 1);
  return p;
}

std::vector<aqs::WindowSample> cut_windows(const std::vector<aqs::HourlyRecord>& records,
                                           const aqs::FeatureSpec& spec, std::size_t t_enc,
                                           std::size_t horizon, std::size_t stride) {
  auto series = aqs::build_features(records, spec, {});
  return aqs::subsample_windows(aqs::make_windows(series, t_enc, horizon), stride);
}

aqs::FeatureSpec fitted_spec(const std::vector<aqs::HourlyRecord>& records,
                             const std::vector<std::string>& drop = {}) {
  aqs::FeatureSpec spec = aqs::FeatureSpec::from_records(records);
  if (!drop.empty()) spec.drop_features(drop);
  return aqs::fit_normalization(records, std::move(spec));
}

std::vector<aqs::HourlyRecord> slice(const std::vector<aqs::HourlyRecord>& records,
                                     std::size_t begin, std::size_t end) {
  return {records.begin() + static_cast<std::ptrdiff_t>(begin),
          records.begin() + static_cast<std::ptrdiff_t>(end)};
}

// ------------------------------------------------- 1: gradient correctness --

Outcome check_gradients() {
  const auto start = Clock::now();
  double worst = 0.0;
  int combos = 0;
  for (aqs::CellVariant variant :
       {aqs::CellVariant::PaperLiteral, aqs::CellVariant::StandardCandidate}) {
    for (aqs::LossKind loss : {aqs::LossKind::MAE, aqs::LossKind::MSE}) {
      for (aqs::DecodeKind kind :
           {aqs::DecodeKind::TeacherForced, aqs::DecodeKind::Autoregressive}) {
        aqs::TrainConfig cfg;
        cfg.hidden = 3;
        cfg.depth = 2;
        cfg.t_enc = 4;
        cfg.horizon = 2;
        cfg.seed = 13;
        cfg.variant = variant;
        cfg.loss = loss;
        worst = std::max(worst, aqs::gradient_check(cfg, kind).max_rel_err);
        ++combos;
      }
    }
  }
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  const bool ok = worst < 1e-5 && seconds < 60.0;
  return {ok, std::to_string(combos) + " variant/loss/decode combos, max rel err " + fmt(worst) +
                  ", tolerance 1e-5"};
}

// ----------------------------------------------------------- 2: cell oracle --

Outcome check_cell_oracle() {
  // Unit candidate weight, unit input, everything else zero: the three gates
  // sit at 1/2, the candidate at tanh(1).
  aqs::LstmParams p = zero_cell(1, 1);
  p.w_xg(0, 0) = 1.0;
  aqs::Matrix x(1, 1);
  x(0, 0) = 1.0;
  aqs::LstmState next =
      aqs::lstm_step(p, aqs::CellVariant::PaperLiteral, x, aqs::zero_state(1, 1));
  const double h_err = std::abs(next.h(0, 0) - 0.18170);

  // Saturated forget gate with a closed input gate carries the memory across.
  aqs::LstmParams q = zero_cell(1, 1);
  q.b_f(0, 0) = 20.0;
  q.b_i(0, 0) = -20.0;
  q.w_xg(0, 0) = 1.0;
  aqs::LstmState state = aqs::zero_state(1, 1);
  state.c(0, 0) = 0.7;
  aqs::Matrix x2(1, 1);
  x2(0, 0) = 0.3;
  aqs::LstmState carried = aqs::lstm_step(q, aqs::CellVariant::PaperLiteral, x2, state);
  const double carry_err = std::abs(carried.c(0, 0) - 0.7);

  const bool ok = h_err < 1e-4 && carry_err < 1e-8;
  return {ok, "|h' - 0.18170| = " + fmt(h_err) + " (tol 1e-4), memory-carry err " +
                  fmt(carry_err) + " (tol 1e-8)"};
}

// ------------------------------------------------------ 3: optimizer oracle --

Outcome check_optimizer_oracle() {
  aqs::ModelDims dims;
  dims.input = 2;
  dims.hidden = 2;
  dims.depth = 1;
  dims.t_enc = 3;
  dims.horizon = 2;

  auto patterned = [](aqs::Seq2SeqGrads& g) {
    double v = -0.3;
    aqs::for_each_param(g, [&](const std::string&, aqs::Matrix& t) {
      for (std::size_t i = 0; i < t.size(); ++i) {
        t.data()[i] = v;
        v += 0.017;
      }
    });
  };

  // First step: the bias-corrected update collapses to -lr * g / (|g| + eps).
  aqs::Seq2SeqModel model = aqs::init_model(3, dims, aqs::CellVariant::StandardCandidate);
  std::vector<aqs::Matrix> before;
  aqs::for_each_param(model, [&](const std::string&, aqs::Matrix& t) { before.push_back(t); });
  aqs::Seq2SeqGrads grads = aqs::zero_grads(model);
  patterned(grads);
  aqs::AdamState adam = aqs::AdamState::init(model);
  aqs::adam_step(model, grads, adam);

  double first_err = 0.0;
  {
    std::size_t k = 0;
    std::vector<const aqs::Matrix*> gs;
    aqs::for_each_param(grads, [&](const std::string&, aqs::Matrix& t) { gs.push_back(&t); });
    aqs::for_each_param(model, [&](const std::string&, aqs::Matrix& t) {
      for (std::size_t i = 0; i < t.size(); ++i) {
        const double g = gs[k]->data()[i];
        const double expected = before[k].data()[i] - 0.001 * g / (std::abs(g) + 1e-8);
        first_err = std::max(first_err, std::abs(t.data()[i] - expected));
      }
      ++k;
    });
  }

  // Two constant-gradient steps against the recurrence unrolled by hand.
  aqs::Seq2SeqModel model2 = aqs::init_model(3, dims, aqs::CellVariant::StandardCandidate);
  std::vector<aqs::Matrix> theta0;
  aqs::for_each_param(model2, [&](const std::string&, aqs::Matrix& t) { theta0.push_back(t); });
  aqs::AdamState adam2 = aqs::AdamState::init(model2);
  aqs::adam_step(model2, grads, adam2);
  aqs::adam_step(model2, grads, adam2);

  const double lr = 0.001, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double two_err = 0.0;
  {
    std::size_t k = 0;
    std::vector<const aqs::Matrix*> gs;
    aqs::for_each_param(grads, [&](const std::string&, aqs::Matrix& t) { gs.push_back(&t); });
    aqs::for_each_param(model2, [&](const std::string&, aqs::Matrix& t) {
      for (std::size_t i = 0; i < t.size(); ++i) {
        const double g = gs[k]->data()[i];
        double theta = theta0[k].data()[i], m = 0.0, v = 0.0;
        for (int step = 1; step <= 2; ++step) {
          m = b1 * m + (1 - b1) * g;
          v = b2 * v + (1 - b2) * g * g;
          const double mh = m / (1 - std::pow(b1, step));
          const double vh = v / (1 - std::pow(b2, step));
          theta -= lr * mh / (std::sqrt(vh) + eps);
        }
        two_err = std::max(two_err, std::abs(t.data()[i] - theta));
      }
      ++k;
    });
  }

  const bool ok = first_err < 1e-9 && two_err < 1e-12;
  return {ok, "first-step err " + fmt(first_err) + " (tol 1e-9), two-step err " + fmt(two_err) +
                  " (tol 1e-12)"};
}

// ------------------------------------------------------- 4: overfit sanity --

Outcome check_overfit() {
  const auto start = Clock::now();
  auto records = aqs::synth_generate(11, 400, aqs::SynthProfile::named("seasonal"));
  aqs::FeatureSpec spec = fitted_spec(records);
  auto windows = cut_windows(records, spec, 24, 8, 11);
  if (windows.size() < 32) throw std::runtime_error("window budget miscalculated");
  windows.resize(32);

  aqs::TrainConfig cfg;
  cfg.depth = 1;
  cfg.hidden = 16;
  cfg.t_enc = 24;
  cfg.horizon = 8;
  cfg.epochs = 2000;
  cfg.batch_size = 32;
  cfg.lr = 0.005;
  cfg.loss = aqs::LossKind::MAE;
  cfg.clip_norm = 5.0;
  cfg.patience = 0;
  cfg.seed = 11;

  aqs::Checkpoint ck = aqs::train(windows, {}, cfg, spec);
  double mae = ck.history.front().train_loss;
  for (const auto& s : ck.history) mae = std::min(mae, s.train_loss);
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  const bool ok = mae < 0.05 && seconds < 300.0;
  return {ok, "32 windows, 2000 epochs -> train MAE reaches " + fmt(mae) + " (final " +
                  fmt(ck.history.back().train_loss) + ", tol 0.05) in " + fmt(seconds, 3) +
                  "s (limit 300s)"};
}

// ---------------------------------------------------- 5: beats persistence --

Outcome check_beats_persistence() {
  const auto start = Clock::now();
  auto records = aqs::synth_generate(21, 17520, aqs::SynthProfile::named("seasonal"));
  auto train_records = slice(records, 0, 15000);
  auto test_records = slice(records, 15000, records.size());
  aqs::FeatureSpec spec = fitted_spec(train_records);

  auto pool = cut_windows(train_records, spec, 24, 8, 6);
  auto [train_w, val_w] = aqs::split_train_val(std::move(pool), 21, 0.12);
  auto test_w = cut_windows(test_records, spec, 24, 8, 2);

  aqs::TrainConfig cfg;
  cfg.depth = 1;
  cfg.hidden = 24;
  cfg.t_enc = 24;
  cfg.horizon = 8;
  cfg.epochs = 8;
  cfg.batch_size = 32;
  cfg.lr = 0.002;
  cfg.loss = aqs::LossKind::MAE;
  cfg.clip_norm = 5.0;
  cfg.patience = 3;
  cfg.seed = 21;

  aqs::Checkpoint ck = aqs::train(train_w, val_w, cfg, spec);
  const double model_rmse = aqs::evaluate(ck, test_w).rmse;
  const double baseline = aqs::persistence_rmse(test_w, spec);
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  const bool ok = model_rmse <= 0.8 * baseline && seconds < 600.0;
  return {ok, "8h RMSE " + fmt(model_rmse) + " vs persistence " + fmt(baseline) + " (need <= " +
                  fmt(0.8 * baseline) + ") in " + fmt(seconds, 3) + "s (limit 600s)"};
}

// --------------------------------------------------- 6: transfer advantage --

Outcome check_transfer_advantage() {
  aqs::SynthProfile profile = aqs::SynthProfile::named("two-regime");
  profile.regime_boundary_hour = profile.start_hour + 3000;
  profile.regime_shift = 25.0;
  auto records = aqs::synth_generate(31, 6000, profile);
  auto period1 = slice(records, 0, 3000);
  auto period2 = slice(records, 3000, 6000);
  aqs::FeatureSpec spec = fitted_spec(period1);

  aqs::TrainConfig cfg;
  cfg.depth = 1;
  cfg.hidden = 32;
  cfg.t_enc = 24;
  cfg.horizon = 8;
  cfg.epochs = 6;
  cfg.batch_size = 32;
  cfg.lr = 0.0015;
  cfg.loss = aqs::LossKind::MAE;
  cfg.clip_norm = 5.0;
  cfg.patience = 0;
  cfg.seed = 31;

  auto p1 = cut_windows(period1, spec, cfg.t_enc, cfg.horizon, 3);
  auto [p1_train, p1_val] = aqs::split_train_val(std::move(p1), cfg.seed, 0.15);
  aqs::Checkpoint base = aqs::train(p1_train, p1_val, cfg, spec);

  auto p2 = cut_windows(period2, spec, cfg.t_enc, cfg.horizon, 3);
  auto [p2_train, p2_val] = aqs::split_train_val(std::move(p2), cfg.seed, 0.15);

  cfg.epochs = 8;
  aqs::Checkpoint scratch = aqs::train(p2_train, p2_val, cfg, spec);
  aqs::Checkpoint moved = aqs::transfer_train(base, p2_train, p2_val, cfg);

  const std::size_t scratch_best = scratch.best_epoch;
  const double scratch_val = scratch.history[scratch_best - 1].val_loss;
  std::size_t crossing = 0;  // first epoch at or below the scratch optimum
  for (std::size_t e = 0; e < moved.history.size(); ++e) {
    if (moved.history[e].val_loss <= scratch_val) {
      crossing = e + 1;
      break;
    }
  }
  const bool ok = crossing != 0 && crossing < scratch_best;
  return {ok, "scratch best val " + fmt(scratch_val) + " at epoch " +
                  std::to_string(scratch_best) + "; warm start reaches it at epoch " +
                  (crossing == 0 ? std::string("never") : std::to_string(crossing))};
}

// ------------------------------------------------------ 7: upstream ablation --

Outcome check_upstream_ablation() {
  aqs::SynthProfile profile = aqs::SynthProfile::named("upstream");
  profile.noise_sigma = 6.0;
  auto records = aqs::synth_generate(41, 6000, profile);
  auto train_records = slice(records, 0, 5000);
  auto test_records = slice(records, 5000, records.size());

  aqs::TrainConfig cfg;
  cfg.depth = 1;
  cfg.hidden = 32;
  cfg.t_enc = 16;
  cfg.horizon = 8;
  cfg.epochs = 10;
  cfg.batch_size = 32;
  cfg.lr = 0.002;
  cfg.loss = aqs::LossKind::MSE;
  cfg.clip_norm = 5.0;
  cfg.patience = 0;
  cfg.seed = 41;

  auto run = [&](const std::vector<std::string>& drop) {
    aqs::FeatureSpec spec = fitted_spec(train_records, drop);
    auto pool = cut_windows(train_records, spec, cfg.t_enc, cfg.horizon, 3);
    auto [train_w, val_w] = aqs::split_train_val(std::move(pool), cfg.seed, 0.15);
    aqs::Checkpoint ck = aqs::train(train_w, val_w, cfg, spec);
    auto test_w = cut_windows(test_records, spec, cfg.t_enc, cfg.horizon, 1);
    return aqs::evaluate(ck, test_w).rmse;
  };

  const double full = run({});
  const double dropped = run({"upstream_aqi"});
  const bool ok = dropped > full;
  return {ok, "8h RMSE with upstream covariate " + fmt(full) + ", without " + fmt(dropped) +
                  " (must increase)"};
}

// ----------------------------------------- 8: determinism and persistence --

Outcome check_determinism() {
  testutil::TempDir dir("acceptance_ckpt");
  auto records = aqs::synth_generate(51, 300, aqs::SynthProfile::named("seasonal"));
  aqs::FeatureSpec spec = fitted_spec(records);
  auto pool = cut_windows(records, spec, 12, 4, 2);

  aqs::TrainConfig cfg;
  cfg.depth = 1;
  cfg.hidden = 8;
  cfg.t_enc = 12;
  cfg.horizon = 4;
  cfg.epochs = 3;
  cfg.batch_size = 16;
  cfg.lr = 0.002;
  cfg.loss = aqs::LossKind::MAE;
  cfg.clip_norm = 5.0;
  cfg.patience = 0;
  cfg.seed = 51;

  auto train_once = [&](const std::string& name) {
    auto windows = pool;
    auto [train_w, val_w] = aqs::split_train_val(std::move(windows), cfg.seed, 0.2);
    aqs::Checkpoint ck = aqs::train(train_w, val_w, cfg, spec);
    aqs::save_checkpoint(ck, dir.file(name));
    return ck;
  };
  train_once("a.ckpt");
  train_once("b.ckpt");
  const std::string bytes_a = testutil::read_file(dir.file("a.ckpt"));
  const bool reruns_match = bytes_a == testutil::read_file(dir.file("b.ckpt"));

  aqs::Checkpoint reloaded = aqs::load_checkpoint(dir.file("a.ckpt"));
  aqs::save_checkpoint(reloaded, dir.file("c.ckpt"));
  const bool round_trip = bytes_a == testutil::read_file(dir.file("c.ckpt"));

  std::string corrupt = bytes_a;
  corrupt[2 * corrupt.size() / 3] ^= 0x20;
  testutil::write_file(dir.file("d.ckpt"), corrupt);
  bool rejected = false;
  try {
    aqs::load_checkpoint(dir.file("d.ckpt"));
  } catch (const std::exception&) {
    rejected = true;
  }

  const bool ok = reruns_match && round_trip && rejected;
  return {ok, std::string("re-run bytes ") + (reruns_match ? "identical" : "DIFFER") +
                  ", save/load round trip " + (round_trip ? "identical" : "DIFFERS") +
                  ", corrupted file " + (rejected ? "rejected" : "ACCEPTED")};
}

// ------------------------------------------------------ 9: invariant suite --

Outcome check_invariants() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::size_t checked = 0;

  // Gate and hidden-state ranges stay strictly inside their activations'.
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t hidden = 1 + rep % 4, input = 1 + rep % 5, batch = 1 + rep % 3;
    aqs::LstmParams p = zero_cell(hidden, input);
    aqs::for_each_cell_param(p, aqs::CellVariant::StandardCandidate, "",
                             [&](const std::string&, aqs::Matrix& t) {
                               testutil::fill_uniform(t, rng, -0.5, 0.5);
                             });
    aqs::LstmState state = aqs::zero_state(hidden, batch);
    testutil::fill_uniform(state.c, rng, -0.8, 0.8);
    testutil::fill_uniform(state.h, rng, -0.8, 0.8);
    aqs::Matrix x = testutil::random_matrix(input, batch, rng);
    aqs::LstmStepCache cache;
    const auto variant = rep % 2 == 0 ? aqs::CellVariant::PaperLiteral
                                      : aqs::CellVariant::StandardCandidate;
    aqs::LstmState next = aqs::lstm_step(p, variant, x, state, &cache);
    for (const aqs::Matrix* gate : {&cache.i, &cache.f, &cache.o})
      for (std::size_t i = 0; i < gate->size(); ++i)
        if (!(gate->data()[i] > 0.0 && gate->data()[i] < 1.0))
          return {false, "gate left (0,1) at rep " + std::to_string(rep)};
    for (std::size_t i = 0; i < next.h.size(); ++i)
      if (!(std::abs(next.h.data()[i]) < 1.0))
        return {false, "hidden state left (-1,1) at rep " + std::to_string(rep)};
    for (std::size_t i = 0; i < cache.g.size(); ++i)
      if (!(std::abs(cache.g.data()[i]) < 1.0))
        return {false, "candidate left (-1,1) at rep " + std::to_string(rep)};
    ++checked;
  }

  // The context is the mean of the encoder states: permutation-invariant.
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t t = 1 + rep % 7;
    std::vector<aqs::Matrix> seq;
    for (std::size_t i = 0; i < t; ++i) seq.push_back(testutil::random_matrix(3, 2, rng));
    aqs::Matrix mean = aqs::mean_context(seq);
    std::shuffle(seq.begin(), seq.end(), rng);
    aqs::Matrix shuffled = aqs::mean_context(seq);
    for (std::size_t i = 0; i < mean.size(); ++i)
      if (std::abs(mean.data()[i] - shuffled.data()[i]) > 1e-12)
        return {false, "context mean not permutation-invariant at rep " + std::to_string(rep)};
    ++checked;
  }

  // MAE never exceeds RMSE on the same residuals.
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rep % 64;
    std::vector<double> pred(n), target(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = 10.0 * unit(rng);
      target[i] = 10.0 * unit(rng);
    }
    const double mae = aqs::loss(aqs::LossKind::MAE, pred, target).first;
    if (mae > aqs::rmse(pred, target) + 1e-12)
      return {false, "MAE exceeded RMSE at rep " + std::to_string(rep)};
    ++checked;
  }

  // Clipping: inactive below the threshold, exact rescale above it.
  {
    aqs::ModelDims dims;
    dims.input = 4;
    dims.hidden = 3;
    dims.depth = 1;
    dims.t_enc = 3;
    dims.horizon = 2;
    aqs::Seq2SeqModel model = aqs::init_model(7, dims, aqs::CellVariant::StandardCandidate);
    for (int rep = 0; rep < 100; ++rep) {
      aqs::Seq2SeqGrads grads = aqs::zero_grads(model);
      aqs::for_each_param(
          grads, [&](const std::string&, aqs::Matrix& t) { testutil::fill_uniform(t, rng); });
      const double norm = aqs::global_norm(grads);
      aqs::Seq2SeqGrads loose = grads;
      if (aqs::clip_global_norm(loose, norm * 1.5) != 1.0)
        return {false, "clip engaged below threshold at rep " + std::to_string(rep)};
      double drift = 0.0;
      std::vector<const aqs::Matrix*> a, b;
      aqs::for_each_param(grads, [&](const std::string&, aqs::Matrix& t) { a.push_back(&t); });
      aqs::for_each_param(loose, [&](const std::string&, aqs::Matrix& t) { b.push_back(&t); });
      for (std::size_t k = 0; k < a.size(); ++k)
        for (std::size_t i = 0; i < a[k]->size(); ++i)
          drift = std::max(drift, std::abs(a[k]->data()[i] - b[k]->data()[i]));
      if (drift != 0.0) return {false, "clip moved in-budget gradients at rep " + std::to_string(rep)};

      aqs::Seq2SeqGrads tight = grads;
      const double factor = aqs::clip_global_norm(tight, norm * 0.25);
      if (std::abs(factor - 0.25) > 1e-12)
        return {false, "clip factor wrong at rep " + std::to_string(rep)};
      if (std::abs(aqs::global_norm(tight) - norm * 0.25) > 1e-9 * norm)
        return {false, "clipped norm off target at rep " + std::to_string(rep)};
      ++checked;
    }
  }

  // Window counting matches the usable-run arithmetic, poisoned rows included.
  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t hours = 40 + static_cast<std::size_t>(rep) % 80;
    const std::size_t t_enc = 2 + rep % 9, horizon = 1 + rep % 6;
    auto records = aqs::synth_generate(500 + static_cast<std::uint64_t>(rep), hours,
                                       aqs::SynthProfile::named("seasonal"));
    if (rep % 2 == 1) records[hours / 2].features.erase("wind_speed");  // unusable row
    aqs::FeatureSpec spec = fitted_spec(records);
    auto series = aqs::build_features(records, spec, {});
    const auto& rows = series.front().rows;
    const std::size_t span = t_enc + horizon;
    std::size_t expected = 0;
    for (std::size_t s = 0; s + span <= rows.size(); ++s) {
      bool usable = true;
      for (std::size_t i = s; i < s + span; ++i) usable = usable && rows[i].usable;
      if (usable) ++expected;
    }
    if (aqs::make_windows(series, t_enc, horizon).size() != expected)
      return {false, "window count mismatch at rep " + std::to_string(rep)};
    ++checked;
  }

  // Normalization round trip.
  for (int rep = 0; rep < 200; ++rep) {
    aqs::FeatureStats stats{200.0 * unit(rng), 0.5 + 30.0 * std::abs(unit(rng))};
    const double x = 500.0 * unit(rng);
    const double back = aqs::denormalize_value(stats, aqs::normalize_value(stats, x));
    if (std::abs(back - x) > 1e-9 * std::max(1.0, std::abs(x)))
      return {false, "normalization round trip drifted at rep " + std::to_string(rep)};
    ++checked;
  }

  return {true, std::to_string(checked) + " seeded property checks across six invariant families"};
}

// ------------------------------------------------------ 10: grid shape --

Outcome check_grid_shape() {
  testutil::TempDir dir("acceptance_grid");
  auto shell = [&](const std::string& args) {
    const std::string cmd =
        std::string(AQS_CLI_PATH) + " " + args + " > " + dir.file("log.txt") + " 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };

  if (shell("synth --seed 61 --hours 700 --out " + dir.file("p1")) != 0)
    return {false, "first-period synth failed"};
  if (shell("synth --seed 62 --hours 700 --start 2015-02-15T00:00 --out " + dir.file("p2")) != 0)
    return {false, "second-period synth failed"};
  if (shell("synth --seed 63 --hours 400 --start 2015-04-01T00:00 --out " + dir.file("t")) != 0)
    return {false, "test synth failed"};

  const int code = shell("experiment --train " + dir.file("p1") + "/data.csv," + dir.file("p2") +
                         "/data.csv --test " + dir.file("t") +
                         "/data.csv --seed 70 --epochs 1 --hidden 4 --t-enc 8 --batch 16" +
                         " --window-stride 23 --out " + dir.file("g"));
  if (code != 0) return {false, "experiment run exited with " + std::to_string(code)};

  std::istringstream table(testutil::read_file(dir.file("g") + "/rmse_table.csv"));
  std::string header;
  std::getline(table, header);
  if (header != "setting,h8,h12,h16,h20,h24")
    return {false, "unexpected table header '" + header + "'"};

  const std::vector<std::string> expected_labels = {
      "TF + RNN + MAE",  "TF + RNNs + MAE",  "Joint + RNN + MAE",  "Joint + RNNs + MAE",
      "TF + RNN + MSE",  "TF + RNNs + MSE",  "Joint + RNN + MSE",  "Joint + RNNs + MSE"};
  std::size_t rows = 0;
  std::string line;
  while (std::getline(table, line)) {
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string label;
    std::getline(cells, label, ',');
    if (rows >= expected_labels.size() || label != expected_labels[rows])
      return {false, "row " + std::to_string(rows + 1) + " labelled '" + label + "'"};
    std::size_t numbers = 0;
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      const double v = std::strtod(cell.c_str(), nullptr);
      if (!std::isfinite(v) || v <= 0.0)
        return {false, "non-finite RMSE cell '" + cell + "' in row " + std::to_string(rows + 1)};
      ++numbers;
    }
    if (numbers != 5)
      return {false, "row " + std::to_string(rows + 1) + " has " + std::to_string(numbers) +
                         " cells"};
    ++rows;
  }
  if (rows != 8) return {false, "table has " + std::to_string(rows) + " rows, expected 8"};

  if (testutil::read_file(dir.file("g") + "/summary.txt").find("fingerprints") ==
      std::string::npos)
    return {false, "summary.txt lacks the fingerprints section"};
  for (int h : {8, 12, 16, 20, 24})
    if (!std::filesystem::exists(dir.file("g") + "/plot_h" + std::to_string(h) + ".csv"))
      return {false, "plot_h" + std::to_string(h) + ".csv missing"};

  return {true, "8 rows x 5 horizons, labels and report files as published"};
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    Outcome (*fn)();
  };
  const std::vector<Entry> entries = {
      {1, "gradient-correctness", check_gradients},
      {2, "cell-oracle", check_cell_oracle},
      {3, "optimizer-oracle", check_optimizer_oracle},
      {4, "overfit-sanity", check_overfit},
      {5, "beats-persistence", check_beats_persistence},
      {6, "transfer-advantage", check_transfer_advantage},
      {7, "upstream-ablation", check_upstream_ablation},
      {8, "determinism-persistence", check_determinism},
      {9, "invariant-suite", check_invariants},
      {10, "experiment-grid", check_grid_shape},
  };

  int failures = 0;
  for (const auto& e : entries) {
    const auto start = Clock::now();
    Outcome outcome;
    try {
      outcome = e.fn();
    } catch (const std::exception& ex) {
      outcome = {false, std::string("exception: ") + ex.what()};
    }
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (!outcome.ok) ++failures;
    std::printf("[%s] %2d %-24s %s (%.1fs)\n", outcome.ok ? "PASS" : "FAIL", e.id, e.name,
                outcome.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  if (failures != 0) std::printf("%d of %zu checks failed\n", failures, entries.size());
  return failures == 0 ? 0 : 1;
}
