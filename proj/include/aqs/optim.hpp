#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aqs/seq2seq.hpp"

namespace aqs {

enum class LossKind { MAE, MSE };

std::string to_string(LossKind k);
LossKind loss_kind_from_string(const std::string& s);

// Loss value and its gradient w.r.t. the predictions. MAE uses the
// subgradient sign(p - t) / N with 0 at exact ties; MSE uses 2 (p - t) / N.
std::pair<double, std::vector<double>> loss(LossKind kind, std::span<const double> pred,
                                            std::span<const double> target);

double rmse(std::span<const double> pred, std::span<const double> target);

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment buffers mirror the trainable tensors; t counts
// completed steps.
struct AdamState {
  AdamConfig config;
  std::uint64_t t = 0;
  Seq2SeqGrads m;
  Seq2SeqGrads v;

  static AdamState init(const Seq2SeqModel& model, const AdamConfig& config = {});
};

// One update: m <- b1 m + (1-b1) g, v <- b2 v + (1-b2) g^2, bias-corrected
// m^ = m/(1-b1^t), v^ = v/(1-b2^t), theta <- theta - lr m^/(sqrt(v^)+eps).
// Throws on shape mismatch or a non-finite gradient, naming the tensor.
void adam_step(Seq2SeqModel& params, const Seq2SeqGrads& grads, AdamState& state);

double global_norm(const Seq2SeqGrads& grads);

// Scales all gradients by max_norm / norm when the global L2 norm exceeds
// max_norm. Returns the factor applied (1 when below the threshold).
double clip_global_norm(Seq2SeqGrads& grads, double max_norm);

}  // namespace aqs
