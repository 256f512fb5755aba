#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "platenet/layers.hpp"
#include "platenet/tensor.hpp"

namespace platenet {

// ---------------------------------------------------------------------------
// Binary cross-entropy
// ---------------------------------------------------------------------------

// Probabilities are clamped into [kBceEpsilon, 1-kBceEpsilon] before the log.
inline constexpr float kBceEpsilon = 1e-7f;

struct LossValue {
  float loss;   // mean over the batch
  Tensor grad;  // d(loss)/d(predictions), same shape as predictions
};

// predictions: (N,1) or (N) in (0,1); labels: (N) with values in {0,1}.
// Gradient is (p-y)/(p(1-p))/N inside the clamp region and 0 where the
// clamp is active.
LossValue bce(const Tensor& predictions, const Tensor& labels);

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
  float learning_rate = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-7f;
};

// Adaptive-moment optimizer with bias correction:
//   m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2
//   p <- p - lr * (m/(1-b1^t)) / (sqrt(v/(1-b2^t)) + eps)
class Adam {
 public:
  Adam(const AdamConfig& config, const std::vector<ParamRef>& params);

  // One update over every registered parameter; t increments by exactly 1
  // per call, regardless of batch contents.
  void step(const std::vector<ParamRef>& params);

  int64_t step_count() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  int64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

// ---------------------------------------------------------------------------
// Finite-difference gradient checking
// ---------------------------------------------------------------------------

struct GradCheckFailure {
  size_t tensor_index;
  size_t element;
  double analytic;
  double numeric;
  double rel_error;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  size_t checked = 0;
  std::vector<GradCheckFailure> failures;  // entries above tolerance

  bool passed() const { return failures.empty(); }
};

struct GradCheckTarget {
  Tensor* value;          // parameter (or input) tensor, perturbed in place
  const Tensor* analytic; // gradient to verify, same shape
};

// Central differences (f(x+h)-f(x-h))/2h against the analytic gradient;
// relative error is |a-n| / max(|a|,|n|,1e-6). The loss callable must
// re-evaluate the scalar loss at the targets' current values.
GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::vector<GradCheckTarget>& targets,
                           double step = 1e-3, double tolerance = 1e-2);

}  // namespace platenet
