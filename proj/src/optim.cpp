#include "platenet/optim.hpp"

#include <algorithm>
#include <cmath>

namespace platenet {

LossValue bce(const Tensor& predictions, const Tensor& labels) {
  const size_t n = labels.size();
  if (n == 0 || predictions.size() != n) {
    throw ShapeError("bce expects matching nonempty predictions/labels, got " +
                     predictions.shape().to_string() + " vs " + labels.shape().to_string());
  }
  for (float y : labels.values()) {
    if (y != 0.0f && y != 1.0f) {
      throw ArgumentError("bce labels must be 0 or 1, got " + std::to_string(y));
    }
  }
  const float lo = kBceEpsilon;
  const float hi = 1.0f - kBceEpsilon;
  double total = 0.0;
  Tensor grad(predictions.shape());
  const float inv_n = 1.0f / static_cast<float>(n);
  for (size_t i = 0; i < n; ++i) {
    const float p = predictions[i];
    const float y = labels[i];
    const float c = std::clamp(p, lo, hi);
    total -= y * std::log(static_cast<double>(c)) +
             (1.0 - y) * std::log(1.0 - static_cast<double>(c));
    // Clamped predictions sit on a flat piece of the loss.
    grad[i] = (p > lo && p < hi) ? (c - y) / (c * (1.0f - c)) * inv_n : 0.0f;
  }
  return {static_cast<float>(total / static_cast<double>(n)), std::move(grad)};
}

Adam::Adam(const AdamConfig& config, const std::vector<ParamRef>& params)
    : config_(config) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const ParamRef& p : params) {
    m_.emplace_back(p.value->shape());
    v_.emplace_back(p.value->shape());
  }
}

void Adam::step(const std::vector<ParamRef>& params) {
  if (params.size() != m_.size()) {
    throw ShapeError("Adam sees " + std::to_string(params.size()) +
                     " parameter tensors, was built for " + std::to_string(m_.size()));
  }
  ++t_;
  const float b1 = config_.beta1;
  const float b2 = config_.beta2;
  const float bias1 = 1.0f - std::pow(b1, static_cast<float>(t_));
  const float bias2 = 1.0f - std::pow(b2, static_cast<float>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i].value;
    const Tensor& g = *params[i].grad;
    if (g.shape() != p.shape()) {
      throw ShapeError("Adam gradient shape " + g.shape().to_string() +
                       " does not match parameter " + p.shape().to_string());
    }
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (size_t j = 0; j < p.size(); ++j) {
      m[j] = b1 * m[j] + (1.0f - b1) * g[j];
      v[j] = b2 * v[j] + (1.0f - b2) * g[j] * g[j];
      const float m_hat = m[j] / bias1;
      const float v_hat = v[j] / bias2;
      p[j] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::vector<GradCheckTarget>& targets,
                           double step, double tolerance) {
  GradCheckReport report;
  for (size_t ti = 0; ti < targets.size(); ++ti) {
    Tensor& value = *targets[ti].value;
    const Tensor& analytic = *targets[ti].analytic;
    if (analytic.shape() != value.shape()) {
      throw ShapeError("grad_check analytic gradient shape mismatch");
    }
    for (size_t j = 0; j < value.size(); ++j) {
      const float original = value[j];
      value[j] = static_cast<float>(original + step);
      const double plus = loss();
      value[j] = static_cast<float>(original - step);
      const double minus = loss();
      value[j] = original;
      const double numeric = (plus - minus) / (2.0 * step);
      const double a = analytic[j];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      report.max_rel_error = std::max(report.max_rel_error, rel);
      ++report.checked;
      if (rel > tolerance) {
        report.failures.push_back({ti, j, a, numeric, rel});
      }
    }
  }
  return report;
}

}  // namespace platenet
