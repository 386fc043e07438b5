#include "aqs/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace aqs {

std::string to_string(LossKind k) { return k == LossKind::MAE ? "mae" : "mse"; }

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "mae" || s == "MAE") return LossKind::MAE;
  if (s == "mse" || s == "MSE") return LossKind::MSE;
  throw std::invalid_argument("unknown loss '" + s + "' (expected mae or mse)");
}

namespace {

void check_lengths(const char* who, std::span<const double> pred, std::span<const double> target) {
  if (pred.empty()) throw std::invalid_argument(std::string(who) + ": empty input");
  if (pred.size() != target.size())
    throw std::invalid_argument(std::string(who) + ": length mismatch (" +
                                std::to_string(pred.size()) + " vs " +
                                std::to_string(target.size()) + ")");
}

}  // namespace

std::pair<double, std::vector<double>> loss(LossKind kind, std::span<const double> pred,
                                            std::span<const double> target) {
  check_lengths("loss", pred, target);
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  double total = 0.0;
  std::vector<double> grad(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = pred[i] - target[i];
    if (kind == LossKind::MAE) {
      total += std::abs(r);
      grad[i] = r > 0.0 ? inv_n : (r < 0.0 ? -inv_n : 0.0);
    } else {
      total += r * r;
      grad[i] = 2.0 * r * inv_n;
    }
  }
  return {total * inv_n, std::move(grad)};
}

double rmse(std::span<const double> pred, std::span<const double> target) {
  check_lengths("rmse", pred, target);
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = pred[i] - target[i];
    total += r * r;
  }
  return std::sqrt(total / static_cast<double>(pred.size()));
}

AdamState AdamState::init(const Seq2SeqModel& model, const AdamConfig& config) {
  AdamState state;
  state.config = config;
  state.m = zero_grads(model);
  state.v = zero_grads(model);
  return state;
}

void adam_step(Seq2SeqModel& params, const Seq2SeqGrads& grads, AdamState& state) {
  auto ps = collect_params(params);
  auto gs = collect_params(grads);
  auto ms = collect_params(state.m);
  auto vs = collect_params(state.v);
  if (gs.size() != ps.size() || ms.size() != ps.size() || vs.size() != ps.size())
    throw std::invalid_argument("adam_step: gradient set does not mirror the parameter set");

  for (std::size_t i = 0; i < ps.size(); ++i) {
    const Matrix& g = *gs[i].second;
    if (!g.same_shape(*ps[i].second))
      throw std::invalid_argument("adam_step: shape mismatch in " + ps[i].first + " (" +
                                  ps[i].second->shape() + " vs " + g.shape() + ")");
    if (!g.all_finite())
      throw std::invalid_argument("adam_step: non-finite gradient in " + ps[i].first);
  }

  ++state.t;
  const AdamConfig& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));

  for (std::size_t i = 0; i < ps.size(); ++i) {
    Matrix& p = *ps[i].second;
    const Matrix& g = *gs[i].second;
    Matrix& m = *ms[i].second;
    Matrix& v = *vs[i].second;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = g.data()[k];
      double& mk = m.data()[k];
      double& vk = v.data()[k];
      mk = c.beta1 * mk + (1.0 - c.beta1) * gk;
      vk = c.beta2 * vk + (1.0 - c.beta2) * gk * gk;
      const double m_hat = mk / bc1;
      const double v_hat = vk / bc2;
      p.data()[k] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

double global_norm(const Seq2SeqGrads& grads) {
  double total = 0.0;
  for_each_param(grads, [&](const std::string&, const Matrix& g) { total += squared_norm(g); });
  return std::sqrt(total);
}

double clip_global_norm(Seq2SeqGrads& grads, double max_norm) {
  if (!(max_norm > 0.0))
    throw std::invalid_argument("clip_global_norm: max_norm must be positive");
  const double norm = global_norm(grads);
  if (norm <= max_norm) return 1.0;
  const double factor = max_norm / norm;
  for_each_param(grads, [&](const std::string&, Matrix& g) { scale_in_place(g, factor); });
  return factor;
}

}  // namespace aqs
