#pragma once

// Test-only reference implementations. These stay independent of the
// library's computation paths (the conv oracle is a direct quadruple loop,
// not im2col) so they can arbitrate them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "platenet/layers.hpp"
#include "platenet/model.hpp"
#include "platenet/optim.hpp"
#include "platenet/rng.hpp"
#include "platenet/tensor.hpp"

namespace oracle {

// Direct-summation valid convolution over NHWC input and (k,k,C,F) weights.
inline platenet::Tensor conv2d_reference(const platenet::Tensor& input,
                                         const platenet::Tensor& weights,
                                         const platenet::Tensor& bias, int stride) {
  const int batch = input.shape()[0];
  const int in_h = input.shape()[1];
  const int in_w = input.shape()[2];
  const int channels = input.shape()[3];
  const int k = weights.shape()[0];
  const int filters = weights.shape()[3];
  const int out_h = (in_h - k) / stride + 1;
  const int out_w = (in_w - k) / stride + 1;
  platenet::Tensor out({batch, out_h, out_w, filters});
  for (int n = 0; n < batch; ++n) {
    for (int i = 0; i < out_h; ++i) {
      for (int j = 0; j < out_w; ++j) {
        for (int f = 0; f < filters; ++f) {
          double acc = bias.at(f);
          for (int a = 0; a < k; ++a) {
            for (int b = 0; b < k; ++b) {
              for (int c = 0; c < channels; ++c) {
                acc += static_cast<double>(input.at(n, i * stride + a, j * stride + b, c)) *
                       static_cast<double>(weights.at(a, b, c, f));
              }
            }
          }
          out.at(n, i, j, f) = static_cast<float>(acc);
        }
      }
    }
  }
  return out;
}

// Hand-computable 90-degree rotation of an (H,W,1) image: transpose, then
// reverse each row.
inline platenet::Tensor rotate90_reference(const platenet::Tensor& img) {
  const int h = img.shape()[0];
  const int w = img.shape()[1];
  platenet::Tensor out({w, h, 1});
  for (int r = 0; r < w; ++r) {
    for (int c = 0; c < h; ++c) {
      out.at(r, c, 0) = img.at(h - 1 - c, r, 0);
    }
  }
  return out;
}

inline platenet::Tensor random_tensor(const platenet::Shape& shape, platenet::Rng& rng,
                                      float lo = -1.0f, float hi = 1.0f) {
  platenet::Tensor t(shape);
  for (float& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// Double-precision forward pass + BCE over a conv/pool/flatten/dense chain,
// reading the model's float32 parameters. Finite differences through the
// float32 forward drown small gradients in accumulation noise amplified by
// 1/(2h); widening the checker's loss evaluations removes that noise while
// the analytic gradients under test remain the 32-bit implementation's.
struct DoubleEval {
  double loss = 0.0;
  // Hash of every ReLU sign and pool argmax decision; finite differences
  // are only valid over probe intervals where this stays constant.
  uint64_t decisions = 14695981039346656037ULL;

  void mix(uint64_t v) {
    decisions ^= v;
    decisions *= 1099511628211ULL;
  }
};

inline DoubleEval model_bce_double_eval(platenet::Model& model,
                                        const platenet::Tensor& batch, float label) {
  using namespace platenet;
  if (batch.shape()[0] != 1) throw std::invalid_argument("single-example batches only");
  DoubleEval eval;
  int h = batch.shape()[1];
  int w = batch.shape()[2];
  int c = batch.shape()[3];
  std::vector<double> act(batch.size());
  for (size_t i = 0; i < act.size(); ++i) act[i] = batch[i];

  const auto relu_inplace = [&eval](std::vector<double>& v) {
    for (double& x : v) {
      eval.mix(x > 0.0 ? 1 : 0);
      x = x > 0.0 ? x : 0.0;
    }
  };

  for (size_t li = 0; li < model.layer_count(); ++li) {
    Layer& layer = model.layer(li);
    if (auto* conv = dynamic_cast<Conv2DLayer*>(&layer)) {
      const int k = conv->kernel_size();
      const int s = conv->stride();
      const int filters = conv->filters();
      const int oh = (h - k) / s + 1;
      const int ow = (w - k) / s + 1;
      std::vector<double> out(static_cast<size_t>(oh) * ow * filters);
      const Tensor& wt = conv->weights();
      const Tensor& bias = conv->bias();
      for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j) {
          for (int f = 0; f < filters; ++f) {
            double acc = bias[static_cast<size_t>(f)];
            for (int a = 0; a < k; ++a) {
              for (int b = 0; b < k; ++b) {
                for (int ch = 0; ch < c; ++ch) {
                  acc += act[(static_cast<size_t>(i * s + a) * w + (j * s + b)) * c + ch] *
                         static_cast<double>(wt.at(a, b, ch, f));
                }
              }
            }
            out[(static_cast<size_t>(i) * ow + j) * filters + f] = acc;
          }
        }
      }
      if (conv->activation() == Activation::kRelu) relu_inplace(out);
      act = std::move(out);
      h = oh;
      w = ow;
      c = filters;
    } else if (auto* pool = dynamic_cast<MaxPool2DLayer*>(&layer)) {
      const int p = pool->pool_size();
      const int s = pool->stride();
      const int oh = (h - p) / s + 1;
      const int ow = (w - p) / s + 1;
      std::vector<double> out(static_cast<size_t>(oh) * ow * c);
      for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j) {
          for (int ch = 0; ch < c; ++ch) {
            double best = act[(static_cast<size_t>(i * s) * w + j * s) * c + ch];
            int best_at = 0;
            for (int a = 0; a < p; ++a) {
              for (int b = 0; b < p; ++b) {
                const double v =
                    act[(static_cast<size_t>(i * s + a) * w + (j * s + b)) * c + ch];
                if (v > best) {
                  best = v;
                  best_at = a * p + b;
                }
              }
            }
            eval.mix(static_cast<uint64_t>(best_at));
            out[(static_cast<size_t>(i) * ow + j) * c + ch] = best;
          }
        }
      }
      act = std::move(out);
      h = oh;
      w = ow;
    } else if (dynamic_cast<FlattenLayer*>(&layer)) {
      // act is already flat in row-major order.
    } else if (auto* dense = dynamic_cast<DenseLayer*>(&layer)) {
      const int units = dense->units();
      const int features = dense->in_features();
      std::vector<double> out(static_cast<size_t>(units));
      const Tensor& wt = dense->weights();
      const Tensor& bias = dense->bias();
      for (int u = 0; u < units; ++u) {
        double acc = bias[static_cast<size_t>(u)];
        for (int f = 0; f < features; ++f) {
          acc += act[static_cast<size_t>(f)] * static_cast<double>(wt.at(f, u));
        }
        out[static_cast<size_t>(u)] = acc;
      }
      if (dense->activation() == Activation::kRelu) {
        relu_inplace(out);
      } else if (dense->activation() == Activation::kSigmoid) {
        for (double& x : out) x = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      }
      act = std::move(out);
    } else {
      throw std::invalid_argument("unsupported layer in double evaluator: " +
                                  layer.type_name());
    }
  }
  if (act.size() != 1) throw std::invalid_argument("expected a single output");
  const double p = std::min(std::max(act[0], 1e-7), 1.0 - 1e-7);
  eval.mix(p == act[0] ? 0 : 1);  // clamp region is flat
  eval.loss = -(label * std::log(p) + (1.0 - label) * std::log(1.0 - p));
  return eval;
}

inline double model_bce_double(platenet::Model& model, const platenet::Tensor& batch,
                               float label) {
  return model_bce_double_eval(model, batch, label).loss;
}

struct ModelGradCheck {
  double max_rel_error = 0.0;
  size_t checked = 0;
  size_t skipped_boundary = 0;  // probe interval crossed a relu/pool decision
  size_t over_tolerance = 0;
};

// Central-difference check of a model's analytic parameter gradients
// against the double-precision evaluator. Probes that flip any activation
// decision between theta-h and theta+h sit on a non-differentiable
// interval, where finite differences say nothing; they are counted, not
// judged.
inline ModelGradCheck model_grad_check(platenet::Model& model,
                                       const platenet::Tensor& batch, float label,
                                       double step, double tolerance) {
  using namespace platenet;
  const Tensor out = model.forward(batch, Mode::kTraining);
  Tensor labels({1}, {label});
  const LossValue lv = bce(out, labels);
  model.backward(lv.grad);

  ModelGradCheck result;
  for (const ParamRef& param : model.parameters()) {
    Tensor& value = *param.value;
    const Tensor& analytic = *param.grad;
    for (size_t j = 0; j < value.size(); ++j) {
      const float original = value[j];
      value[j] = static_cast<float>(original + step);
      const DoubleEval plus = model_bce_double_eval(model, batch, label);
      value[j] = static_cast<float>(original - step);
      const DoubleEval minus = model_bce_double_eval(model, batch, label);
      value[j] = original;
      if (plus.decisions != minus.decisions) {
        ++result.skipped_boundary;
        continue;
      }
      const double numeric = (plus.loss - minus.loss) / (2.0 * step);
      const double a = analytic[j];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      result.max_rel_error = std::max(result.max_rel_error, rel);
      result.over_tolerance += rel > tolerance ? 1 : 0;
      ++result.checked;
    }
  }
  return result;
}

// Scalar random-projection loss sum(r[i] * t[i]) and its gradient r.
struct Projection {
  std::vector<float> coeff;

  explicit Projection(size_t n, platenet::Rng& rng) {
    coeff.resize(n);
    for (float& c : coeff) c = rng.uniform(-1.0f, 1.0f);
  }
  double loss(const platenet::Tensor& t) const {
    double acc = 0.0;
    for (size_t i = 0; i < t.size(); ++i) acc += static_cast<double>(coeff[i]) * t[i];
    return acc;
  }
  platenet::Tensor grad(const platenet::Shape& shape) const {
    platenet::Tensor g(shape);
    for (size_t i = 0; i < g.size(); ++i) g[i] = coeff[i];
    return g;
  }
};

}  // namespace oracle
