#pragma once

#include <memory>
#include <string>
#include <vector>

#include "platenet/rng.hpp"
#include "platenet/tensor.hpp"

namespace platenet {

enum class Mode { kTraining, kInference };
enum class Activation { kNone, kRelu, kSigmoid };

// ---------------------------------------------------------------------------
// Elementwise activations
// ---------------------------------------------------------------------------

// max(0, x) elementwise.
Tensor relu(const Tensor& input);
// Passes grad where x > 0; zero where x <= 0 (derivative at 0 defined as 0).
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);
// 1/(1+exp(-x)) elementwise, branch-by-sign so large |x| never overflows.
Tensor sigmoid(const Tensor& input);
// Uses s*(1-s) with s = sigmoid(input).
Tensor sigmoid_backward(const Tensor& input, const Tensor& grad_out);

Tensor apply_activation(Activation act, const Tensor& preact);
Tensor activation_backward(Activation act, const Tensor& preact, const Tensor& grad_out);

// ---------------------------------------------------------------------------
// Core kernels (pure functions; layers wrap them with parameters and cache)
// ---------------------------------------------------------------------------

// Output extent of a valid (no padding) window scan.
inline int conv_output_extent(int in, int window, int stride) {
  return (in - window) / stride + 1;
}

// Valid convolution over NHWC input with (k,k,C,F) weights:
//   out[n,i,j,f] = bias[f] + sum_{a,b,c} in[n, i*s+a, j*s+b, c] * w[a,b,c,f]
Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      int stride);

struct Conv2DGrads {
  Tensor input;    // (N,H,W,C)
  Tensor weights;  // (k,k,C,F)
  Tensor bias;     // (F)
};
// Adjoints of conv2d_forward for the given grad wrt its output.
Conv2DGrads conv2d_backward(const Tensor& input, const Tensor& weights,
                            const Tensor& grad_out, int stride);

struct MaxPoolOut {
  Tensor output;
  // Per output element, the linear index of its source in the input
  // (first-in-scan-order wins ties).
  std::vector<int64_t> argmax;
};
MaxPoolOut maxpool_forward(const Tensor& input, int pool_size, int stride);
// Routes each output gradient to its argmax source; overlapping windows
// accumulate.
Tensor maxpool_backward(const Shape& input_shape, const std::vector<int64_t>& argmax,
                        const Tensor& grad_out);

// out = input * weights + bias over (N,F) x (F,U), bias broadcast over N.
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct DenseGrads {
  Tensor input;    // (N,F)
  Tensor weights;  // (F,U)
  Tensor bias;     // (U)
};
DenseGrads dense_backward(const Tensor& input, const Tensor& weights,
                          const Tensor& grad_out);

// ---------------------------------------------------------------------------
// Layer objects
// ---------------------------------------------------------------------------

struct ParamRef {
  Tensor* value;
  Tensor* grad;
};

class Layer {
 public:
  virtual ~Layer() = default;

  // Runs the layer; anything backward needs beyond the input itself
  // (pre-activation values, pool argmax, dropout mask) is cached when
  // mode == kTraining.
  virtual Tensor forward(const Tensor& input, Mode mode) = 0;

  // Gradient wrt input. `input` must be the tensor given to the preceding
  // training-mode forward. Parameter gradients land in the layer's grad
  // slots (overwritten, not accumulated).
  virtual Tensor backward(const Tensor& input, const Tensor& grad_out) = 0;

  virtual std::vector<ParamRef> parameters() { return {}; }
  virtual size_t param_count() const { return 0; }

  // Per-example output shape; throws BuildError when the input is too
  // small or has the wrong channel count.
  virtual Shape output_shape(const Shape& input) const = 0;

  virtual std::string type_name() const = 0;  // "Conv2D", "Dense", ...
};

class Conv2DLayer final : public Layer {
 public:
  Conv2DLayer(int in_channels, int filters, int kernel_size, int stride, Activation act);

  // Glorot-uniform weights, zero bias; fan counts use the receptive field.
  void init_weights(Rng& rng);

  Tensor forward(const Tensor& input, Mode mode) override;
  Tensor backward(const Tensor& input, const Tensor& grad_out) override;
  std::vector<ParamRef> parameters() override;
  size_t param_count() const override;
  Shape output_shape(const Shape& input) const override;
  std::string type_name() const override { return "Conv2D"; }

  int filters() const { return filters_; }
  int kernel_size() const { return kernel_; }
  int stride() const { return stride_; }
  int in_channels() const { return in_channels_; }
  Activation activation() const { return act_; }
  Tensor& weights() { return weights_; }
  Tensor& bias() { return bias_; }

 private:
  int in_channels_, filters_, kernel_, stride_;
  Activation act_;
  Tensor weights_, bias_;
  Tensor weight_grad_, bias_grad_;
  Tensor preact_;
};

class MaxPool2DLayer final : public Layer {
 public:
  MaxPool2DLayer(int pool_size, int stride);

  Tensor forward(const Tensor& input, Mode mode) override;
  Tensor backward(const Tensor& input, const Tensor& grad_out) override;
  Shape output_shape(const Shape& input) const override;
  std::string type_name() const override { return "MaxPooling2D"; }

  int pool_size() const { return pool_; }
  int stride() const { return stride_; }

 private:
  int pool_, stride_;
  std::vector<int64_t> argmax_;
  Shape cached_input_shape_;
  bool has_cache_ = false;
};

class FlattenLayer final : public Layer {
 public:
  Tensor forward(const Tensor& input, Mode mode) override;
  Tensor backward(const Tensor& input, const Tensor& grad_out) override;
  Shape output_shape(const Shape& input) const override;
  std::string type_name() const override { return "Flatten"; }
};

class DenseLayer final : public Layer {
 public:
  DenseLayer(int in_features, int units, Activation act);

  void init_weights(Rng& rng);

  Tensor forward(const Tensor& input, Mode mode) override;
  Tensor backward(const Tensor& input, const Tensor& grad_out) override;
  std::vector<ParamRef> parameters() override;
  size_t param_count() const override;
  Shape output_shape(const Shape& input) const override;
  std::string type_name() const override { return "Dense"; }

  int units() const { return units_; }
  int in_features() const { return in_features_; }
  Activation activation() const { return act_; }
  Tensor& weights() { return weights_; }
  Tensor& bias() { return bias_; }

 private:
  int in_features_, units_;
  Activation act_;
  Tensor weights_, bias_;
  Tensor weight_grad_, bias_grad_;
  Tensor preact_;
};

// Inverted dropout: training mode zeroes each element with probability
// `rate` and scales survivors by 1/(1-rate); inference is the exact
// identity.
class DropoutLayer final : public Layer {
 public:
  explicit DropoutLayer(float rate, uint64_t seed = 0);

  Tensor forward(const Tensor& input, Mode mode) override;
  Tensor backward(const Tensor& input, const Tensor& grad_out) override;
  Shape output_shape(const Shape& input) const override { return input; }
  std::string type_name() const override { return "Dropout"; }

  float rate() const { return rate_; }
  void reseed(uint64_t seed) { rng_ = Rng(seed); }

 private:
  float rate_;
  Rng rng_;
  Tensor mask_;  // keep-mask scaled by 1/(1-rate)
  bool has_mask_ = false;
};

}  // namespace platenet
