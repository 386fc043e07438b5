#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aqs/data.hpp"
#include "aqs/lstm.hpp"

namespace aqs {

struct ModelDims {
  std::size_t input = 0;    // feature dimension d
  std::size_t hidden = 0;   // state size n (shared by encoder and decoder)
  std::size_t depth = 1;    // stacked layers per side
  std::size_t t_enc = 24;   // encoder steps
  std::size_t horizon = 8;  // decoder steps
};

// Encoder-decoder forecaster. The encoder consumes d-dimensional feature
// steps; the decoder consumes [previous value ; context] (input size 1+n) and
// projects its top hidden state to a scalar through w_out/b_out.
struct Seq2SeqModel {
  ModelDims dims;
  CellVariant variant = CellVariant::PaperLiteral;
  std::vector<LstmParams> encoder;
  std::vector<LstmParams> decoder;
  Matrix w_out;  // 1 x hidden
  Matrix b_out;  // 1 x 1
};

Seq2SeqModel init_model(std::uint64_t seed, const ModelDims& dims, CellVariant variant);

// Gradient mirror of a model; same traversal order applies.
struct Seq2SeqGrads {
  CellVariant variant = CellVariant::PaperLiteral;
  std::vector<LstmParams> encoder;
  std::vector<LstmParams> decoder;
  Matrix w_out;
  Matrix b_out;
};

Seq2SeqGrads zero_grads(const Seq2SeqModel& model);

// Visits every trainable tensor in the fixed order the optimizer and the
// checkpoint format rely on: encoder layers, decoder layers, output
// projection. Works on models and gradient mirrors, const or not.
template <typename ModelT, typename Fn>
void for_each_param(ModelT& m, Fn&& fn) {
  for (std::size_t l = 0; l < m.encoder.size(); ++l)
    for_each_cell_param(m.encoder[l], m.variant, "encoder." + std::to_string(l), fn);
  for (std::size_t l = 0; l < m.decoder.size(); ++l)
    for_each_cell_param(m.decoder[l], m.variant, "decoder." + std::to_string(l), fn);
  fn(std::string("out.w"), m.w_out);
  fn(std::string("out.b"), m.b_out);
}

template <typename ModelT>
auto collect_params(ModelT& m) {
  std::vector<std::pair<std::string, decltype(&m.w_out)>> out;
  for_each_param(m, [&](const std::string& name, auto& tensor) { out.emplace_back(name, &tensor); });
  return out;
}

// Number of trainable tensors (11 per PaperLiteral cell, 12 per
// StandardCandidate cell, plus the projection pair).
std::size_t param_census(const Seq2SeqModel& model);

// Everything the decoder needs from the encoder: per-step top hidden states,
// their arithmetic mean (the context), and the final states of every layer.
// Columns are batch lanes throughout.
struct EncoderOutput {
  std::vector<Matrix> hidden_seq;  // t_enc entries, n x B
  Matrix context;                  // n x B
  std::vector<LstmState> final_states;
};

Matrix mean_context(std::span<const Matrix> hidden_seq);

// Derivative of the mean: each hidden state receives grad_context / t_enc.
std::vector<Matrix> mean_context_backward(const Matrix& grad_context, std::size_t t_enc);

// Runs the encoder stack from zero initial states over x_seq (each d x B).
EncoderOutput encode(const Seq2SeqModel& model, std::span<const Matrix> x_seq);

enum class DecodeKind { Autoregressive, TeacherForced };

struct DecodeMode {
  DecodeKind kind = DecodeKind::Autoregressive;
  std::vector<double> teacher;  // ground truth y_1..y_H; first H-1 values feed steps 2..H

  static DecodeMode autoregressive() { return {}; }
  static DecodeMode teacher_forced(std::vector<double> targets) {
    return {DecodeKind::TeacherForced, std::move(targets)};
  }
};

// Emits H scalars. Step t consumes [y_{t-1} ; context]; y_0 seeds the first
// step, later steps take the previous prediction (Autoregressive) or the
// previous ground-truth value (TeacherForced). Decoder states start from the
// encoder's final states.
std::vector<double> decode(const Seq2SeqModel& model, const EncoderOutput& enc, double y0,
                           std::size_t horizon, const DecodeMode& mode);

// One training batch: windows widened into the column dimension.
struct Batch {
  std::vector<Matrix> x_seq;         // t_enc entries, d x B
  std::vector<double> y0;            // B
  std::vector<std::vector<double>> targets;  // horizon entries, each B values
  std::size_t size = 0;
};

Batch make_batch(const std::vector<WindowSample>& windows, std::span<const std::size_t> indices);

// Intermediates of one batched forward pass, retained for backward.
struct ForwardCache {
  DecodeKind kind = DecodeKind::TeacherForced;
  std::size_t batch = 0;
  StackedCache encoder;
  std::vector<Matrix> enc_hidden;  // top-layer hidden per encoder step
  Matrix context;
  StackedCache decoder;
  std::vector<Matrix> dec_top;  // top-layer hidden per decoder step
  std::vector<Matrix> preds;    // 1 x B per step
};

// Returns per-step predictions (1 x B each). TeacherForced steps read the
// previous target row from the batch; Autoregressive steps feed back the
// previous prediction.
std::vector<Matrix> forward_batch(const Seq2SeqModel& model, const Batch& batch, DecodeKind kind,
                                  ForwardCache* cache = nullptr);

// Full backpropagation through decoder, mean context and encoder.
// grad_preds holds the loss gradient on each emitted step (1 x B each). In
// Autoregressive mode the gradient of a prediction also flows into the next
// step's input; teacher-forced inputs are constants. The mean context
// distributes its gradient as 1/t_enc to every encoder hidden state, and the
// decoder's initial-state gradients reach the encoder's final states.
Seq2SeqGrads backward_batch(const Seq2SeqModel& model, const ForwardCache& cache,
                            std::span<const Matrix> grad_preds);

// Single-window conveniences over the batched core (batch width 1).
std::vector<double> forward(const Seq2SeqModel& model, const WindowSample& window,
                            const DecodeMode& mode, ForwardCache* cache = nullptr);

Seq2SeqGrads backward(const Seq2SeqModel& model, const ForwardCache& cache,
                      std::span<const double> loss_grad_seq);

}  // namespace aqs
