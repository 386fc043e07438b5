#include "aqs/seq2seq.hpp"

#include <stdexcept>

#include "aqs/rng.hpp"

namespace aqs {
namespace {

void check_dims(const ModelDims& d) {
  if (d.input == 0 || d.hidden == 0 || d.depth == 0 || d.t_enc == 0 || d.horizon == 0)
    throw std::invalid_argument("init_model: every dimension must be at least 1");
}

// Decoder step input: previous scalar output on top of the context block.
Matrix stack_input(const Matrix& y_prev, const Matrix& context) {
  const std::size_t n = context.rows(), b = context.cols();
  Matrix in(1 + n, b);
  for (std::size_t j = 0; j < b; ++j) in(0, j) = y_prev(0, j);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < b; ++j) in(1 + r, j) = context(r, j);
  return in;
}

Matrix project(const Seq2SeqModel& model, const Matrix& h_top) {
  return add_col_broadcast(matmul(model.w_out, h_top), model.b_out);
}

}  // namespace

Seq2SeqModel init_model(std::uint64_t seed, const ModelDims& dims, CellVariant variant) {
  check_dims(dims);
  std::mt19937_64 rng(seed);
  Seq2SeqModel m;
  m.dims = dims;
  m.variant = variant;
  m.encoder = init_params_with(rng, dims.input, dims.hidden, variant, dims.depth);
  m.decoder = init_params_with(rng, 1 + dims.hidden, dims.hidden, variant, dims.depth);
  m.w_out = Matrix(1, dims.hidden);
  glorot_fill(rng, m.w_out);
  m.b_out = Matrix(1, 1);
  return m;
}

Seq2SeqGrads zero_grads(const Seq2SeqModel& model) {
  Seq2SeqGrads g;
  g.variant = model.variant;
  g.encoder.reserve(model.encoder.size());
  for (const auto& layer : model.encoder) g.encoder.push_back(zeros_like(layer));
  g.decoder.reserve(model.decoder.size());
  for (const auto& layer : model.decoder) g.decoder.push_back(zeros_like(layer));
  g.w_out = Matrix(model.w_out.rows(), model.w_out.cols());
  g.b_out = Matrix(1, 1);
  return g;
}

std::size_t param_census(const Seq2SeqModel& model) {
  std::size_t count = 0;
  for_each_param(model, [&](const std::string&, const Matrix&) { ++count; });
  return count;
}

Matrix mean_context(std::span<const Matrix> hidden_seq) {
  if (hidden_seq.empty()) throw std::invalid_argument("mean_context: empty hidden sequence");
  Matrix acc = hidden_seq.front();
  for (std::size_t t = 1; t < hidden_seq.size(); ++t) add_in_place(acc, hidden_seq[t]);
  scale_in_place(acc, 1.0 / static_cast<double>(hidden_seq.size()));
  return acc;
}

std::vector<Matrix> mean_context_backward(const Matrix& grad_context, std::size_t t_enc) {
  if (t_enc == 0) throw std::invalid_argument("mean_context_backward: t_enc must be at least 1");
  return std::vector<Matrix>(t_enc, scale(grad_context, 1.0 / static_cast<double>(t_enc)));
}

EncoderOutput encode(const Seq2SeqModel& model, std::span<const Matrix> x_seq) {
  if (x_seq.empty()) throw std::invalid_argument("encode: empty input sequence");
  for (const Matrix& x : x_seq) {
    if (x.rows() != model.dims.input)
      throw std::invalid_argument("encode: expected " + std::to_string(model.dims.input) +
                                  "-row inputs, got " + x.shape());
  }
  EncoderOutput out;
  auto [hidden, finals] = stacked_forward(model.encoder, model.variant, x_seq);
  out.hidden_seq = std::move(hidden);
  out.final_states = std::move(finals);
  out.context = mean_context(out.hidden_seq);
  return out;
}

std::vector<double> decode(const Seq2SeqModel& model, const EncoderOutput& enc, double y0,
                           std::size_t horizon, const DecodeMode& mode) {
  if (horizon == 0) throw std::invalid_argument("decode: horizon must be at least 1");
  if (enc.context.cols() != 1)
    throw std::invalid_argument("decode: expected a single-column context, got " +
                                enc.context.shape());
  if (mode.kind == DecodeKind::TeacherForced && mode.teacher.size() + 1 < horizon)
    throw std::invalid_argument("decode: teacher sequence has " +
                                std::to_string(mode.teacher.size()) + " values; need at least " +
                                std::to_string(horizon - 1));

  std::vector<LstmState> states = enc.final_states;
  Matrix y_prev(1, 1, y0);
  std::vector<double> out;
  out.reserve(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    Matrix h_top = stacked_step(model.decoder, model.variant, stack_input(y_prev, enc.context),
                                states);
    Matrix pred = project(model, h_top);
    out.push_back(pred(0, 0));
    if (t + 1 < horizon)
      y_prev = mode.kind == DecodeKind::TeacherForced ? Matrix(1, 1, mode.teacher[t])
                                                      : std::move(pred);
  }
  return out;
}

Batch make_batch(const std::vector<WindowSample>& windows, std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("make_batch: empty index set");

  const WindowSample& first = windows.at(indices.front());
  const std::size_t t_enc = first.encoder.rows();
  const std::size_t d = first.encoder.cols();
  const std::size_t horizon = first.target.size();
  const std::size_t b = indices.size();

  Batch batch;
  batch.size = b;
  batch.x_seq.assign(t_enc, Matrix(d, b));
  batch.y0.resize(b);
  batch.targets.assign(horizon, std::vector<double>(b));

  for (std::size_t j = 0; j < b; ++j) {
    const WindowSample& w = windows.at(indices[j]);
    if (w.encoder.rows() != t_enc || w.encoder.cols() != d || w.target.size() != horizon)
      throw std::invalid_argument("make_batch: window shapes differ within the batch");
    for (std::size_t t = 0; t < t_enc; ++t)
      for (std::size_t k = 0; k < d; ++k) batch.x_seq[t](k, j) = w.encoder(t, k);
    batch.y0[j] = w.encoder(t_enc - 1, 0);
    for (std::size_t h = 0; h < horizon; ++h) batch.targets[h][j] = w.target[h];
  }
  return batch;
}

std::vector<Matrix> forward_batch(const Seq2SeqModel& model, const Batch& batch, DecodeKind kind,
                                  ForwardCache* cache) {
  const std::size_t horizon = model.dims.horizon;
  if (batch.x_seq.size() != model.dims.t_enc)
    throw std::invalid_argument("forward_batch: window length " +
                                std::to_string(batch.x_seq.size()) +
                                " does not match model encoder length " +
                                std::to_string(model.dims.t_enc));
  if (batch.x_seq.front().rows() != model.dims.input)
    throw std::invalid_argument("forward_batch: feature dimension " +
                                std::to_string(batch.x_seq.front().rows()) +
                                " does not match model input size " +
                                std::to_string(model.dims.input));
  if (kind == DecodeKind::TeacherForced && batch.targets.size() + 1 < horizon)
    throw std::invalid_argument("forward_batch: teacher-forced run needs " +
                                std::to_string(horizon - 1) + " target steps, batch carries " +
                                std::to_string(batch.targets.size()));

  const std::size_t b = batch.size;
  auto [enc_hidden, finals] =
      stacked_forward(model.encoder, model.variant, batch.x_seq, {},
                      cache != nullptr ? &cache->encoder : nullptr);
  Matrix context = mean_context(enc_hidden);

  if (cache != nullptr) {
    cache->kind = kind;
    cache->batch = b;
    cache->enc_hidden = enc_hidden;
    cache->context = context;
    cache->decoder.steps.resize(horizon);
    cache->dec_top.clear();
    cache->preds.clear();
  }

  std::vector<LstmState> states = std::move(finals);
  Matrix y_prev(1, b);
  for (std::size_t j = 0; j < b; ++j) y_prev(0, j) = batch.y0[j];

  std::vector<Matrix> preds;
  preds.reserve(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    Matrix h_top =
        stacked_step(model.decoder, model.variant, stack_input(y_prev, context), states,
                     cache != nullptr ? &cache->decoder.steps[t] : nullptr);
    Matrix pred = project(model, h_top);
    if (cache != nullptr) {
      cache->dec_top.push_back(h_top);
      cache->preds.push_back(pred);
    }
    if (t + 1 < horizon) {
      if (kind == DecodeKind::TeacherForced) {
        const auto& row = batch.targets[t];
        if (row.size() != b)
          throw std::invalid_argument("forward_batch: target step " + std::to_string(t) +
                                      " has " + std::to_string(row.size()) + " lanes, expected " +
                                      std::to_string(b));
        for (std::size_t j = 0; j < b; ++j) y_prev(0, j) = row[j];
      } else {
        y_prev = pred;
      }
    }
    preds.push_back(std::move(pred));
  }
  return preds;
}

Seq2SeqGrads backward_batch(const Seq2SeqModel& model, const ForwardCache& cache,
                            std::span<const Matrix> grad_preds) {
  const std::size_t horizon = cache.preds.size();
  const std::size_t b = cache.batch;
  const std::size_t n = model.dims.hidden;
  if (horizon == 0) throw std::invalid_argument("backward_batch: cache holds no forward pass");
  if (grad_preds.size() != horizon)
    throw std::invalid_argument("backward_batch: expected " + std::to_string(horizon) +
                                " prediction gradients, got " + std::to_string(grad_preds.size()));
  for (const Matrix& g : grad_preds) {
    if (g.rows() != 1 || g.cols() != b)
      throw std::invalid_argument("backward_batch: prediction gradient shape " + g.shape() +
                                  " does not match 1x" + std::to_string(b));
  }

  Seq2SeqGrads grads = zero_grads(model);
  const std::size_t depth = model.decoder.size();
  std::vector<Matrix> grad_h(depth, Matrix(n, b));
  std::vector<Matrix> grad_c(depth, Matrix(n, b));
  Matrix grad_context(n, b);
  Matrix carry(1, b);  // autoregressive: gradient reaching pred t via step t+1's input

  for (std::size_t t = horizon; t-- > 0;) {
    Matrix g_pred = grad_preds[t];
    if (cache.kind == DecodeKind::Autoregressive && t + 1 < horizon)
      add_in_place(g_pred, carry);

    matmul_nt_acc(grads.w_out, g_pred, cache.dec_top[t]);
    add_in_place(grads.b_out, sum_cols(g_pred));
    matmul_tn_acc(grad_h.back(), model.w_out, g_pred);

    Matrix grad_in = stacked_step_backward(model.decoder, model.variant, cache.decoder.steps[t],
                                           grad_h, grad_c, grads.decoder);
    for (std::size_t j = 0; j < b; ++j) carry(0, j) = grad_in(0, j);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < b; ++j) grad_context(r, j) += grad_in(1 + r, j);
  }

  // Decoder initial states are the encoder's final states.
  std::vector<LstmState> grad_finals(depth);
  for (std::size_t l = 0; l < depth; ++l) grad_finals[l] = {grad_h[l], grad_c[l]};

  auto grad_top_seq = mean_context_backward(grad_context, cache.enc_hidden.size());
  StackedGrads enc = stacked_backward(model.encoder, model.variant, cache.encoder, grad_top_seq,
                                      grad_finals);
  grads.encoder = std::move(enc.layers);
  return grads;
}

std::vector<double> forward(const Seq2SeqModel& model, const WindowSample& window,
                            const DecodeMode& mode, ForwardCache* cache) {
  const std::size_t horizon = model.dims.horizon;
  if (mode.kind == DecodeKind::TeacherForced && mode.teacher.size() + 1 < horizon)
    throw std::invalid_argument("forward: teacher sequence has " +
                                std::to_string(mode.teacher.size()) + " values; need at least " +
                                std::to_string(horizon - 1));

  const std::size_t t_enc = window.encoder.rows();
  const std::size_t d = window.encoder.cols();
  Batch batch;
  batch.size = 1;
  batch.x_seq.assign(t_enc, Matrix(d, 1));
  for (std::size_t t = 0; t < t_enc; ++t)
    for (std::size_t k = 0; k < d; ++k) batch.x_seq[t](k, 0) = window.encoder(t, k);
  batch.y0 = {window.encoder(t_enc - 1, 0)};
  if (mode.kind == DecodeKind::TeacherForced) {
    batch.targets.assign(horizon, std::vector<double>(1, 0.0));
    for (std::size_t t = 0; t < horizon && t < mode.teacher.size(); ++t)
      batch.targets[t][0] = mode.teacher[t];
  }

  auto preds = forward_batch(model, batch, mode.kind, cache);
  std::vector<double> out;
  out.reserve(preds.size());
  for (const Matrix& p : preds) out.push_back(p(0, 0));
  return out;
}

Seq2SeqGrads backward(const Seq2SeqModel& model, const ForwardCache& cache,
                      std::span<const double> loss_grad_seq) {
  std::vector<Matrix> grad_preds;
  grad_preds.reserve(loss_grad_seq.size());
  for (double g : loss_grad_seq) grad_preds.push_back(Matrix(1, 1, g));
  return backward_batch(model, cache, grad_preds);
}

}  // namespace aqs
