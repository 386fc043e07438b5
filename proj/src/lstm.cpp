#include "aqs/lstm.hpp"

#include <cmath>
#include <stdexcept>

#include "aqs/rng.hpp"

namespace aqs {

std::string to_string(CellVariant v) {
  return v == CellVariant::PaperLiteral ? "paper_literal" : "standard_candidate";
}

CellVariant cell_variant_from_string(const std::string& s) {
  if (s == "paper_literal" || s == "paper") return CellVariant::PaperLiteral;
  if (s == "standard_candidate" || s == "standard") return CellVariant::StandardCandidate;
  throw std::invalid_argument("unknown cell variant: " + s);
}

std::size_t cell_param_count(CellVariant variant) {
  return variant == CellVariant::StandardCandidate ? 12 : 11;
}

std::pair<Matrix, Matrix> rnn_step(const RnnParams& params, const Matrix& x_t,
                                   const Matrix& h_prev) {
  Matrix pre = matmul(params.w_xh, x_t);
  matmul_acc(pre, params.w_hh, h_prev);
  const Matrix h_t = map_sigmoid(add_col_broadcast(pre, params.b_h));
  const Matrix y_t = add_col_broadcast(matmul(params.w_hy, h_t), params.b_y);
  return {h_t, y_t};
}

LstmState zero_state(std::size_t hidden, std::size_t batch) {
  return {Matrix(hidden, batch), Matrix(hidden, batch)};
}

namespace {

Matrix gate_preact(const Matrix& w_x, const Matrix& x, const Matrix& w_h, const Matrix& h,
                   const Matrix& b) {
  Matrix pre = matmul(w_x, x);
  matmul_acc(pre, w_h, h);
  return add_col_broadcast(pre, b);
}

}  // namespace

LstmState lstm_step(const LstmParams& params, CellVariant variant, const Matrix& x_t,
                    const LstmState& state, LstmStepCache* cache) {
  if (state.h.rows() != params.hidden_size() || !state.h.same_shape(state.c)) {
    throw std::invalid_argument("lstm_step: state shape mismatch (h " + state.h.shape() +
                                ", c " + state.c.shape() + ", hidden " +
                                std::to_string(params.hidden_size()) + ")");
  }
  if (x_t.cols() != state.h.cols()) {
    throw std::invalid_argument("lstm_step: batch mismatch (x " + x_t.shape() + " vs h " +
                                state.h.shape() + ")");
  }
  if (!state.h.all_finite() || !state.c.all_finite()) {
    throw std::invalid_argument("lstm_step: non-finite state");
  }

  const Matrix i = map_sigmoid(gate_preact(params.w_xi, x_t, params.w_hi, state.h, params.b_i));
  const Matrix f = map_sigmoid(gate_preact(params.w_xf, x_t, params.w_hf, state.h, params.b_f));
  const Matrix o = map_sigmoid(gate_preact(params.w_xo, x_t, params.w_ho, state.h, params.b_o));

  Matrix g_pre = matmul(params.w_xg, x_t);
  if (variant == CellVariant::StandardCandidate) {
    matmul_acc(g_pre, params.w_hg, state.h);
  }
  const Matrix g = map_tanh(add_col_broadcast(g_pre, params.b_g));

  const Matrix c_new = add(hadamard(f, state.c), hadamard(i, g));
  const Matrix tanh_c = map_tanh(c_new);
  const Matrix h_new = hadamard(o, tanh_c);

  if (cache != nullptr) {
    *cache = {x_t, state.h, state.c, i, f, o, g, c_new, tanh_c};
  }
  return {h_new, c_new};
}

LstmParams zeros_like(const LstmParams& params) {
  const std::size_t n = params.hidden_size();
  const std::size_t d = params.input_size();
  LstmParams z;
  z.w_xi = Matrix(n, d);
  z.w_hi = Matrix(n, n);
  z.b_i = Matrix(n, 1);
  z.w_xf = Matrix(n, d);
  z.w_hf = Matrix(n, n);
  z.b_f = Matrix(n, 1);
  z.w_xo = Matrix(n, d);
  z.w_ho = Matrix(n, n);
  z.b_o = Matrix(n, 1);
  z.w_xg = Matrix(n, d);
  z.w_hg = Matrix(n, n);
  z.b_g = Matrix(n, 1);
  return z;
}

Matrix lstm_step_backward_acc(const LstmParams& params, CellVariant variant,
                              const LstmStepCache& cache, Matrix& grad_h, Matrix& grad_c,
                              LstmParams& param_grads) {
  if (cache.i.rows() != params.hidden_size() || cache.x.rows() != params.input_size()) {
    throw std::invalid_argument("lstm_step_backward: cache does not match parameters (gate " +
                                cache.i.shape() + ", x " + cache.x.shape() + ")");
  }
  if (!grad_h.same_shape(cache.i) || !grad_c.same_shape(cache.i)) {
    throw std::invalid_argument("lstm_step_backward: upstream gradient shape mismatch (" +
                                grad_h.shape() + ", " + grad_c.shape() + " vs " +
                                cache.i.shape() + ")");
  }

  const std::size_t n = cache.i.size();
  const double* i = cache.i.data();
  const double* f = cache.f.data();
  const double* o = cache.o.data();
  const double* g = cache.g.data();
  const double* tc = cache.tanh_c.data();
  const double* cp = cache.c_prev.data();
  const double* gh = grad_h.data();
  const double* gc = grad_c.data();

  Matrix da_i = cache.i, da_f = cache.f, da_o = cache.o, da_g = cache.g;
  Matrix dc_prev = cache.c_prev;
  double* pdi = da_i.data();
  double* pdf = da_f.data();
  double* pdo = da_o.data();
  double* pdg = da_g.data();
  double* pdc = dc_prev.data();

  for (std::size_t k = 0; k < n; ++k) {
    const double dc_total = gc[k] + gh[k] * o[k] * (1.0 - tc[k] * tc[k]);
    pdo[k] = gh[k] * tc[k] * o[k] * (1.0 - o[k]);
    pdf[k] = dc_total * cp[k] * f[k] * (1.0 - f[k]);
    pdi[k] = dc_total * g[k] * i[k] * (1.0 - i[k]);
    pdg[k] = dc_total * i[k] * (1.0 - g[k] * g[k]);
    pdc[k] = dc_total * f[k];
  }

  matmul_nt_acc(param_grads.w_xi, da_i, cache.x);
  matmul_nt_acc(param_grads.w_hi, da_i, cache.h_prev);
  add_in_place(param_grads.b_i, sum_cols(da_i));
  matmul_nt_acc(param_grads.w_xf, da_f, cache.x);
  matmul_nt_acc(param_grads.w_hf, da_f, cache.h_prev);
  add_in_place(param_grads.b_f, sum_cols(da_f));
  matmul_nt_acc(param_grads.w_xo, da_o, cache.x);
  matmul_nt_acc(param_grads.w_ho, da_o, cache.h_prev);
  add_in_place(param_grads.b_o, sum_cols(da_o));
  matmul_nt_acc(param_grads.w_xg, da_g, cache.x);
  if (variant == CellVariant::StandardCandidate) {
    matmul_nt_acc(param_grads.w_hg, da_g, cache.h_prev);
  }
  add_in_place(param_grads.b_g, sum_cols(da_g));

  Matrix grad_x(cache.x.rows(), cache.x.cols());
  matmul_tn_acc(grad_x, params.w_xi, da_i);
  matmul_tn_acc(grad_x, params.w_xf, da_f);
  matmul_tn_acc(grad_x, params.w_xo, da_o);
  matmul_tn_acc(grad_x, params.w_xg, da_g);

  Matrix grad_h_prev(cache.h_prev.rows(), cache.h_prev.cols());
  matmul_tn_acc(grad_h_prev, params.w_hi, da_i);
  matmul_tn_acc(grad_h_prev, params.w_hf, da_f);
  matmul_tn_acc(grad_h_prev, params.w_ho, da_o);
  if (variant == CellVariant::StandardCandidate) {
    matmul_tn_acc(grad_h_prev, params.w_hg, da_g);
  }

  grad_h = std::move(grad_h_prev);
  grad_c = std::move(dc_prev);
  return grad_x;
}

LstmStepGrads lstm_step_backward(const LstmParams& params, CellVariant variant,
                                 const LstmStepCache& cache, const Matrix& grad_h_next,
                                 const Matrix& grad_c_next) {
  LstmStepGrads out;
  out.params = zeros_like(params);
  Matrix gh = grad_h_next;
  Matrix gc = grad_c_next;
  out.x = lstm_step_backward_acc(params, variant, cache, gh, gc, out.params);
  out.h_prev = std::move(gh);
  out.c_prev = std::move(gc);
  return out;
}

Matrix stacked_step(std::span<const LstmParams> layers, CellVariant variant, const Matrix& x_t,
                    std::vector<LstmState>& states, std::vector<LstmStepCache>* caches) {
  if (layers.empty()) throw std::invalid_argument("stacked_step: no layers");
  if (states.size() != layers.size()) {
    throw std::invalid_argument("stacked_step: expected " + std::to_string(layers.size()) +
                                " states, got " + std::to_string(states.size()));
  }
  if (caches != nullptr) caches->resize(layers.size());
  Matrix input = x_t;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (input.rows() != layers[l].input_size()) {
      throw std::invalid_argument("stacked_step: layer " + std::to_string(l) + " expects " +
                                  std::to_string(layers[l].input_size()) +
                                  " inputs, got " + std::to_string(input.rows()));
    }
    LstmStepCache* cache = caches != nullptr ? &(*caches)[l] : nullptr;
    states[l] = lstm_step(layers[l], variant, input, states[l], cache);
    input = states[l].h;
  }
  return input;
}

std::pair<std::vector<Matrix>, std::vector<LstmState>> stacked_forward(
    std::span<const LstmParams> layers, CellVariant variant, std::span<const Matrix> x_seq,
    std::vector<LstmState> init_states, StackedCache* cache) {
  if (x_seq.empty()) throw std::invalid_argument("stacked_forward: empty input sequence");
  if (layers.empty()) throw std::invalid_argument("stacked_forward: no layers");

  const std::size_t batch = x_seq.front().cols();
  std::vector<LstmState> states = std::move(init_states);
  if (states.empty()) {
    for (const LstmParams& layer : layers) {
      states.push_back(zero_state(layer.hidden_size(), batch));
    }
  }
  if (states.size() != layers.size()) {
    throw std::invalid_argument("stacked_forward: expected " + std::to_string(layers.size()) +
                                " initial states, got " + std::to_string(states.size()));
  }

  if (cache != nullptr) cache->steps.resize(x_seq.size());
  std::vector<Matrix> top_seq;
  top_seq.reserve(x_seq.size());
  for (std::size_t t = 0; t < x_seq.size(); ++t) {
    std::vector<LstmStepCache>* step_caches = cache != nullptr ? &cache->steps[t] : nullptr;
    top_seq.push_back(stacked_step(layers, variant, x_seq[t], states, step_caches));
  }
  return {std::move(top_seq), std::move(states)};
}

Matrix stacked_step_backward(std::span<const LstmParams> layers, CellVariant variant,
                             std::span<const LstmStepCache> caches, std::vector<Matrix>& grad_h,
                             std::vector<Matrix>& grad_c, std::vector<LstmParams>& layer_grads) {
  if (caches.size() != layers.size() || grad_h.size() != layers.size() ||
      grad_c.size() != layers.size() || layer_grads.size() != layers.size()) {
    throw std::invalid_argument("stacked_step_backward: layer count mismatch");
  }
  Matrix grad_x;
  for (std::size_t l = layers.size(); l-- > 0;) {
    grad_x = lstm_step_backward_acc(layers[l], variant, caches[l], grad_h[l], grad_c[l],
                                    layer_grads[l]);
    if (l > 0) add_in_place(grad_h[l - 1], grad_x);
  }
  return grad_x;
}

StackedGrads stacked_backward(std::span<const LstmParams> layers, CellVariant variant,
                              const StackedCache& cache,
                              std::span<const Matrix> grad_h_top_seq,
                              std::span<const LstmState> grad_final_states) {
  const std::size_t steps = cache.steps.size();
  if (grad_h_top_seq.size() != steps) {
    throw std::invalid_argument("stacked_backward: expected " + std::to_string(steps) +
                                " top gradients, got " + std::to_string(grad_h_top_seq.size()));
  }
  if (steps == 0) throw std::invalid_argument("stacked_backward: empty cache");

  const std::size_t batch = grad_h_top_seq.front().cols();
  StackedGrads out;
  out.layers.reserve(layers.size());
  for (const LstmParams& layer : layers) out.layers.push_back(zeros_like(layer));
  out.x_seq.resize(steps);

  std::vector<Matrix> grad_h, grad_c;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (l < grad_final_states.size()) {
      grad_h.push_back(grad_final_states[l].h);
      grad_c.push_back(grad_final_states[l].c);
    } else {
      grad_h.push_back(Matrix(layers[l].hidden_size(), batch));
      grad_c.push_back(Matrix(layers[l].hidden_size(), batch));
    }
  }

  for (std::size_t t = steps; t-- > 0;) {
    add_in_place(grad_h.back(), grad_h_top_seq[t]);
    out.x_seq[t] =
        stacked_step_backward(layers, variant, cache.steps[t], grad_h, grad_c, out.layers);
  }
  return out;
}

void glorot_fill(std::mt19937_64& rng, Matrix& m) {
  const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  double* p = m.data();
  for (std::size_t k = 0; k < m.size(); ++k) p[k] = uniform_range(rng, -bound, bound);
}

std::vector<LstmParams> init_params_with(std::mt19937_64& rng, std::size_t input_size,
                                         std::size_t hidden_size, CellVariant variant,
                                         std::size_t depth) {
  if (input_size == 0 || hidden_size == 0 || depth == 0) {
    throw std::invalid_argument("init_params: dimensions must be positive (input " +
                                std::to_string(input_size) + ", hidden " +
                                std::to_string(hidden_size) + ", depth " +
                                std::to_string(depth) + ")");
  }
  std::vector<LstmParams> layers;
  layers.reserve(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    const std::size_t in = l == 0 ? input_size : hidden_size;
    LstmParams p;
    p.w_xi = Matrix(hidden_size, in);
    p.w_hi = Matrix(hidden_size, hidden_size);
    p.b_i = Matrix(hidden_size, 1);
    p.w_xf = Matrix(hidden_size, in);
    p.w_hf = Matrix(hidden_size, hidden_size);
    p.b_f = Matrix(hidden_size, 1, 1.0);
    p.w_xo = Matrix(hidden_size, in);
    p.w_ho = Matrix(hidden_size, hidden_size);
    p.b_o = Matrix(hidden_size, 1);
    p.w_xg = Matrix(hidden_size, in);
    p.w_hg = Matrix(hidden_size, hidden_size);
    p.b_g = Matrix(hidden_size, 1);

    glorot_fill(rng, p.w_xi);
    glorot_fill(rng, p.w_hi);
    glorot_fill(rng, p.w_xf);
    glorot_fill(rng, p.w_hf);
    glorot_fill(rng, p.w_xo);
    glorot_fill(rng, p.w_ho);
    glorot_fill(rng, p.w_xg);
    if (variant == CellVariant::StandardCandidate) glorot_fill(rng, p.w_hg);
    layers.push_back(std::move(p));
  }
  return layers;
}

std::vector<LstmParams> init_params(std::uint64_t seed, std::size_t input_size,
                                    std::size_t hidden_size, CellVariant variant,
                                    std::size_t depth) {
  std::mt19937_64 rng(seed);
  return init_params_with(rng, input_size, hidden_size, variant, depth);
}

}  // namespace aqs
