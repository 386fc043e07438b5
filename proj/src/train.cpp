#include "aqs/train.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "aqs/rng.hpp"

namespace aqs {

std::string config_text(const TrainConfig& c) {
  std::ostringstream out;
  out << "batch_size=" << c.batch_size << '\n'
      << "clip_norm=" << format_g17(c.clip_norm) << '\n'
      << "depth=" << c.depth << '\n'
      << "epochs=" << c.epochs << '\n'
      << "hidden=" << c.hidden << '\n'
      << "horizon=" << c.horizon << '\n'
      << "loss=" << to_string(c.loss) << '\n'
      << "lr=" << format_g17(c.lr) << '\n'
      << "patience=" << c.patience << '\n'
      << "seed=" << c.seed << '\n'
      << "t_enc=" << c.t_enc << '\n'
      << "variant=" << to_string(c.variant) << '\n';
  return out.str();
}

TrainConfig config_from_text(const std::string& text) {
  TrainConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config text: malformed line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "batch_size") c.batch_size = std::stoull(value);
      else if (key == "clip_norm") c.clip_norm = std::stod(value);
      else if (key == "depth") c.depth = std::stoull(value);
      else if (key == "epochs") c.epochs = std::stoull(value);
      else if (key == "hidden") c.hidden = std::stoull(value);
      else if (key == "horizon") c.horizon = std::stoull(value);
      else if (key == "loss") c.loss = loss_kind_from_string(value);
      else if (key == "lr") c.lr = std::stod(value);
      else if (key == "patience") c.patience = std::stoull(value);
      else if (key == "seed") c.seed = std::stoull(value);
      else if (key == "t_enc") c.t_enc = std::stoull(value);
      else if (key == "variant") c.variant = cell_variant_from_string(value);
      else throw std::invalid_argument("unknown key");
    } catch (const std::exception&) {
      throw std::invalid_argument("config text: bad entry '" + line + "'");
    }
  }
  return c;
}

std::string config_fingerprint(const TrainConfig& c) {
  const std::string text = config_text(c);
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char byte : text) {
    hash ^= byte;
    hash *= 1099511628211ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string hex(16, '0');
  for (int i = 15; i >= 0; --i) {
    hex[i] = digits[hash & 0xF];
    hash >>= 4;
  }
  return hex;
}

namespace {

void validate_config(const TrainConfig& c) {
  if (c.batch_size == 0) throw std::invalid_argument("train config: batch_size must be positive");
  if (!(c.lr > 0.0)) throw std::invalid_argument("train config: lr must be positive");
  if (c.depth == 0) throw std::invalid_argument("train config: depth must be positive");
  if (c.hidden == 0) throw std::invalid_argument("train config: hidden must be positive");
  if (c.t_enc == 0) throw std::invalid_argument("train config: t_enc must be positive");
  if (c.horizon == 0) throw std::invalid_argument("train config: horizon must be positive");
  if (!(c.clip_norm > 0.0)) throw std::invalid_argument("train config: clip_norm must be positive");
}

void check_windows(const char* who, const std::vector<WindowSample>& windows,
                   const TrainConfig& c, std::size_t input_dim) {
  for (const auto& w : windows) {
    if (w.encoder.rows() != c.t_enc)
      throw std::invalid_argument(std::string(who) + ": window length " +
                                  std::to_string(w.encoder.rows()) + " does not match t_enc " +
                                  std::to_string(c.t_enc));
    if (w.encoder.cols() != input_dim)
      throw std::invalid_argument(std::string(who) + ": window feature dimension " +
                                  std::to_string(w.encoder.cols()) + " does not match " +
                                  std::to_string(input_dim));
    if (w.target.size() != c.horizon)
      throw std::invalid_argument(std::string(who) + ": window horizon " +
                                  std::to_string(w.target.size()) + " does not match " +
                                  std::to_string(c.horizon));
  }
}

// Pooled loss of autoregressive predictions, NaN when there is nothing to
// validate against.
double autoregressive_loss(const Seq2SeqModel& model, const std::vector<WindowSample>& windows,
                           const TrainConfig& cfg) {
  if (windows.empty()) return std::numeric_limits<double>::quiet_NaN();

  double total = 0.0;
  std::size_t elems = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < windows.size(); start += cfg.batch_size) {
    const std::size_t end = std::min(windows.size(), start + cfg.batch_size);
    idx.resize(end - start);
    for (std::size_t i = start; i < end; ++i) idx[i - start] = i;

    Batch batch = make_batch(windows, idx);
    auto preds = forward_batch(model, batch, DecodeKind::Autoregressive);

    std::vector<double> flat_pred, flat_target;
    flat_pred.reserve(preds.size() * batch.size);
    flat_target.reserve(preds.size() * batch.size);
    for (std::size_t t = 0; t < preds.size(); ++t) {
      for (std::size_t j = 0; j < batch.size; ++j) {
        flat_pred.push_back(preds[t](0, j));
        flat_target.push_back(batch.targets[t][j]);
      }
    }
    total += loss(cfg.loss, flat_pred, flat_target).first * static_cast<double>(flat_pred.size());
    elems += flat_pred.size();
  }
  return total / static_cast<double>(elems);
}

Checkpoint run_training(Seq2SeqModel model, const std::vector<WindowSample>& train_windows,
                        const std::vector<WindowSample>& val_windows, const TrainConfig& cfg,
                        const FeatureSpec& features, std::string lineage, std::ostream* log) {
  validate_config(cfg);
  if (train_windows.empty()) throw std::invalid_argument("train: no training windows");
  check_windows("train", train_windows, cfg, model.dims.input);
  check_windows("train (validation)", val_windows, cfg, model.dims.input);
  if (features.dimension() != model.dims.input)
    throw std::invalid_argument("train: feature spec dimension " +
                                std::to_string(features.dimension()) +
                                " does not match window dimension " +
                                std::to_string(model.dims.input));

  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;
  AdamState adam = AdamState::init(model, adam_cfg);
  std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, 1));

  Checkpoint ck;
  ck.config = cfg;
  ck.lineage = std::move(lineage);
  ck.features = features;

  const bool has_val = !val_windows.empty();
  Seq2SeqModel best = model;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;

  const std::size_t n = train_windows.size();
  std::vector<Matrix> grad_preds;
  ForwardCache cache;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto order = shuffled_indices(n, shuffle_rng);

    double loss_sum = 0.0;
    std::size_t loss_elems = 0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      ++batch_no;
      const std::size_t end = std::min(n, start + cfg.batch_size);
      std::span<const std::size_t> idx(order.data() + start, end - start);

      Batch batch = make_batch(train_windows, idx);
      auto preds = forward_batch(model, batch, DecodeKind::TeacherForced, &cache);

      const std::size_t b = batch.size;
      std::vector<double> flat_pred(preds.size() * b), flat_target(preds.size() * b);
      for (std::size_t t = 0; t < preds.size(); ++t) {
        for (std::size_t j = 0; j < b; ++j) {
          flat_pred[t * b + j] = preds[t](0, j);
          flat_target[t * b + j] = batch.targets[t][j];
        }
      }
      auto [batch_loss, grad] = loss(cfg.loss, flat_pred, flat_target);
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(batch_no));
      loss_sum += batch_loss * static_cast<double>(flat_pred.size());
      loss_elems += flat_pred.size();

      grad_preds.assign(preds.size(), Matrix(1, b));
      for (std::size_t t = 0; t < preds.size(); ++t)
        for (std::size_t j = 0; j < b; ++j) grad_preds[t](0, j) = grad[t * b + j];

      Seq2SeqGrads grads = backward_batch(model, cache, grad_preds);
      clip_global_norm(grads, cfg.clip_norm);
      adam_step(model, grads, adam);
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(loss_elems);
    stats.val_loss = autoregressive_loss(model, val_windows, cfg);
    ck.history.push_back(stats);

    if (log) {
      *log << "epoch " << epoch << "/" << cfg.epochs << " train " << stats.train_loss;
      if (has_val) *log << " val " << stats.val_loss;
      *log << '\n';
    }

    if (has_val) {
      if (stats.val_loss < best_val) {
        best_val = stats.val_loss;
        best = model;
        ck.best_epoch = static_cast<std::uint32_t>(epoch);
        stale = 0;
      } else if (++stale >= cfg.patience && cfg.patience > 0) {
        if (log) *log << "early stop after epoch " << epoch << '\n';
        break;
      }
    }
  }

  if (has_val && ck.best_epoch > 0) {
    ck.model = std::move(best);
  } else {
    // No validation signal: keep the final parameters (the initialization
    // when epochs = 0).
    ck.model = std::move(model);
    ck.best_epoch = static_cast<std::uint32_t>(ck.history.size());
  }
  return ck;
}

}  // namespace

Checkpoint train(const std::vector<WindowSample>& train_windows,
                 const std::vector<WindowSample>& val_windows, const TrainConfig& config,
                 const FeatureSpec& features, std::ostream* log) {
  if (train_windows.empty()) throw std::invalid_argument("train: no training windows");
  ModelDims dims;
  dims.input = train_windows.front().encoder.cols();
  dims.hidden = config.hidden;
  dims.depth = config.depth;
  dims.t_enc = config.t_enc;
  dims.horizon = config.horizon;
  validate_config(config);
  Seq2SeqModel model = init_model(config.seed, dims, config.variant);
  return run_training(std::move(model), train_windows, val_windows, config, features, "", log);
}

Checkpoint transfer_train(const Checkpoint& base, const std::vector<WindowSample>& train_windows,
                          const std::vector<WindowSample>& val_windows, const TrainConfig& config,
                          std::ostream* log) {
  if (train_windows.empty()) throw std::invalid_argument("transfer_train: no training windows");
  const std::size_t new_dim = train_windows.front().encoder.cols();
  if (new_dim != base.model.dims.input)
    throw std::invalid_argument("transfer_train: feature dimension " + std::to_string(new_dim) +
                                " does not match the base model's " +
                                std::to_string(base.model.dims.input));

  TrainConfig cfg = config;
  cfg.depth = base.config.depth;
  cfg.hidden = base.config.hidden;
  cfg.t_enc = base.config.t_enc;
  cfg.horizon = base.config.horizon;
  cfg.variant = base.config.variant;

  return run_training(base.model, train_windows, val_windows, cfg, base.features,
                      config_fingerprint(base.config), log);
}

GradCheckReport gradient_check(const TrainConfig& config, DecodeKind kind) {
  constexpr double kH = 1e-5;
  constexpr std::size_t kInputDim = 3;

  ModelDims dims;
  dims.input = kInputDim;
  dims.hidden = config.hidden;
  dims.depth = config.depth;
  dims.t_enc = config.t_enc;
  dims.horizon = config.horizon;
  Seq2SeqModel model = init_model(config.seed, dims, config.variant);

  std::mt19937_64 rng(mix_seed(config.seed, 7));
  WindowSample window;
  window.encoder = Matrix(config.t_enc, kInputDim);
  for (std::size_t r = 0; r < config.t_enc; ++r)
    for (std::size_t c = 0; c < kInputDim; ++c) window.encoder(r, c) = gaussian(rng);
  window.target.assign(config.horizon, 0.0);

  // Anchor the targets half a unit from the initial predictions, alternating
  // sides, so MAE residuals never sit near the kink.
  DecodeMode probe = kind == DecodeKind::TeacherForced
                         ? DecodeMode::teacher_forced(std::vector<double>(config.horizon, 0.0))
                         : DecodeMode::autoregressive();
  auto p0 = forward(model, window, probe);
  std::vector<double> targets(config.horizon);
  for (std::size_t i = 0; i < targets.size(); ++i)
    targets[i] = p0[i] - (i % 2 == 0 ? 0.5 : -0.5);

  DecodeMode mode = kind == DecodeKind::TeacherForced ? DecodeMode::teacher_forced(targets)
                                                      : DecodeMode::autoregressive();
  auto eval_loss = [&]() {
    auto preds = forward(model, window, mode);
    return loss(config.loss, preds, targets).first;
  };

  ForwardCache cache;
  auto preds = forward(model, window, mode, &cache);
  auto grad = loss(config.loss, preds, targets).second;
  Seq2SeqGrads grads = backward(model, cache, grad);

  auto params = collect_params(model);
  auto analytic = collect_params(grads);

  GradCheckReport report;
  for (std::size_t i = 0; i < params.size(); ++i) {
    GradCheckEntry entry;
    entry.tensor = params[i].first;
    Matrix& tensor = *params[i].second;
    const Matrix& a = *analytic[i].second;
    for (std::size_t k = 0; k < tensor.size(); ++k) {
      const double saved = tensor.data()[k];
      tensor.data()[k] = saved + kH;
      const double up = eval_loss();
      tensor.data()[k] = saved - kH;
      const double down = eval_loss();
      tensor.data()[k] = saved;

      const double numeric = (up - down) / (2.0 * kH);
      const double rel = std::abs(a.data()[k] - numeric) /
                         std::max({std::abs(a.data()[k]), std::abs(numeric), 1e-4});
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
    }
    report.per_tensor.push_back(std::move(entry));
    report.max_rel_err = std::max(report.max_rel_err, report.per_tensor.back().max_rel_err);
  }
  return report;
}

}  // namespace aqs
