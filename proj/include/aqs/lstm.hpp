#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aqs/matrix.hpp"

namespace aqs {

// Candidate-path wiring of the LSTM cell. PaperLiteral computes the cell
// candidate from the current input only; StandardCandidate adds the
// conventional hidden-recurrence term. In PaperLiteral the recurrence matrix
// w_hg is pinned to zero and excluded from the trainable set.
enum class CellVariant { PaperLiteral, StandardCandidate };

std::string to_string(CellVariant v);
CellVariant cell_variant_from_string(const std::string& s);

// Baseline recurrent cell: h_t = sigmoid(w_xh x + w_hh h_prev + b_h),
// y_t = w_hy h_t + b_y.
struct RnnParams {
  Matrix w_xh, w_hh, b_h;
  Matrix w_hy, b_y;
};

std::pair<Matrix, Matrix> rnn_step(const RnnParams& params, const Matrix& x_t,
                                   const Matrix& h_prev);

struct LstmParams {
  Matrix w_xi, w_hi, b_i;  // input gate
  Matrix w_xf, w_hf, b_f;  // forget gate
  Matrix w_xo, w_ho, b_o;  // output gate
  Matrix w_xg, w_hg, b_g;  // cell candidate

  std::size_t hidden_size() const { return w_xi.rows(); }
  std::size_t input_size() const { return w_xi.cols(); }
};

// Enumerates the trainable tensors of one cell in a fixed order; w_hg is
// visited only for StandardCandidate. All optimizer state, checkpoints and
// gradient reports rely on this order.
template <typename ParamsT, typename Fn>
void for_each_cell_param(ParamsT& p, CellVariant variant, const std::string& prefix, Fn&& fn) {
  fn(prefix + ".w_xi", p.w_xi);
  fn(prefix + ".w_hi", p.w_hi);
  fn(prefix + ".b_i", p.b_i);
  fn(prefix + ".w_xf", p.w_xf);
  fn(prefix + ".w_hf", p.w_hf);
  fn(prefix + ".b_f", p.b_f);
  fn(prefix + ".w_xo", p.w_xo);
  fn(prefix + ".w_ho", p.w_ho);
  fn(prefix + ".b_o", p.b_o);
  fn(prefix + ".w_xg", p.w_xg);
  if (variant == CellVariant::StandardCandidate) fn(prefix + ".w_hg", p.w_hg);
  fn(prefix + ".b_g", p.b_g);
}

// Trainable tensor count per cell: 11 for PaperLiteral, 12 for StandardCandidate.
std::size_t cell_param_count(CellVariant variant);

// Hidden and cell activations. Columns are batch lanes; every contract stated
// for a single column generalizes columnwise.
struct LstmState {
  Matrix h, c;
};

LstmState zero_state(std::size_t hidden, std::size_t batch);

// Intermediates of one forward step, kept for the backward pass.
struct LstmStepCache {
  Matrix x, h_prev, c_prev;
  Matrix i, f, o, g;
  Matrix c, tanh_c;
};

// One LSTM step. Gates i, f, o are sigmoid-activated; the candidate is
// tanh(w_xg x + b_g) for PaperLiteral and tanh(w_xg x + w_hg h_prev + b_g)
// for StandardCandidate; c' = f.c + i.g; h' = o.tanh(c').
// Throws on shape mismatch and on non-finite state.
LstmState lstm_step(const LstmParams& params, CellVariant variant, const Matrix& x_t,
                    const LstmState& state, LstmStepCache* cache = nullptr);

LstmParams zeros_like(const LstmParams& params);

struct LstmStepGrads {
  LstmParams params;
  Matrix x, h_prev, c_prev;
};

// Exact gradients of one step w.r.t. every input and parameter, given the
// upstream gradients on h' and c'. w_hg gradients are zero in PaperLiteral.
LstmStepGrads lstm_step_backward(const LstmParams& params, CellVariant variant,
                                 const LstmStepCache& cache, const Matrix& grad_h_next,
                                 const Matrix& grad_c_next);

// Accumulating form used by the sequence loops: parameter gradients are added
// into param_grads, and grad_h/grad_c are replaced by the previous-step
// gradients. Returns the gradient w.r.t. the step input.
Matrix lstm_step_backward_acc(const LstmParams& params, CellVariant variant,
                              const LstmStepCache& cache, Matrix& grad_h, Matrix& grad_c,
                              LstmParams& param_grads);

// Per-time-step, per-layer caches of a stacked run; steps[t][l].
struct StackedCache {
  std::vector<std::vector<LstmStepCache>> steps;
};

// One time step through a stack of layers; layer l consumes layer l-1's
// hidden output. states is updated in place; returns the top hidden output.
Matrix stacked_step(std::span<const LstmParams> layers, CellVariant variant, const Matrix& x_t,
                    std::vector<LstmState>& states, std::vector<LstmStepCache>* caches = nullptr);

// Runs a stack over a whole sequence from the given initial states (zeros if
// empty). Returns the top layer's hidden sequence and the final states of all
// layers.
std::pair<std::vector<Matrix>, std::vector<LstmState>> stacked_forward(
    std::span<const LstmParams> layers, CellVariant variant, std::span<const Matrix> x_seq,
    std::vector<LstmState> init_states = {}, StackedCache* cache = nullptr);

// Backward through one stacked step. caches holds the per-layer caches of
// that step; grad_h/grad_c carry the state gradients flowing in from the
// following step and are replaced by the gradients for the preceding one.
// The caller adds any gradient on the top hidden output into grad_h.back()
// before the call. Parameter gradients accumulate into layer_grads.
Matrix stacked_step_backward(std::span<const LstmParams> layers, CellVariant variant,
                             std::span<const LstmStepCache> caches, std::vector<Matrix>& grad_h,
                             std::vector<Matrix>& grad_c, std::vector<LstmParams>& layer_grads);

struct StackedGrads {
  std::vector<LstmParams> layers;
  std::vector<Matrix> x_seq;
};

// Full-sequence backward: grad_h_top_seq holds per-time gradients on the top
// hidden outputs, grad_final_states the gradients on the final states of all
// layers (may be empty for none).
StackedGrads stacked_backward(std::span<const LstmParams> layers, CellVariant variant,
                              const StackedCache& cache,
                              std::span<const Matrix> grad_h_top_seq,
                              std::span<const LstmState> grad_final_states = {});

// Seeded layer-stack initialization: weights uniform in
// +/- sqrt(6 / (fan_in + fan_out)), biases zero except the forget-gate bias,
// which starts at 1. Layer 0 consumes input_size features, deeper layers
// consume the hidden size below them.
std::vector<LstmParams> init_params(std::uint64_t seed, std::size_t input_size,
                                    std::size_t hidden_size, CellVariant variant,
                                    std::size_t depth);

// Same, drawing from a caller-owned engine (used to chain several stacks off
// one seed).
std::vector<LstmParams> init_params_with(std::mt19937_64& rng, std::size_t input_size,
                                         std::size_t hidden_size, CellVariant variant,
                                         std::size_t depth);

// Glorot-uniform fill from the same engine; exposed for the output projection.
void glorot_fill(std::mt19937_64& rng, Matrix& m);

}  // namespace aqs
