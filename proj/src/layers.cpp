#include "platenet/layers.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstring>
#include <utility>

namespace platenet {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;
using ConstMapVec = Eigen::Map<const Eigen::VectorXf>;

float sigmoid_scalar(float x) {
  if (x >= 0.0f) {
    return 1.0f / (1.0f + std::exp(-x));
  }
  const float e = std::exp(x);
  return e / (1.0f + e);
}

void check_conv_args(const Tensor& input, const Tensor& weights, int stride) {
  if (input.shape().rank() != 4) {
    throw ShapeError("conv2d expects NHWC input, got " + input.shape().to_string());
  }
  if (weights.shape().rank() != 4) {
    throw ShapeError("conv2d expects (k,k,C,F) weights, got " + weights.shape().to_string());
  }
  const int k = weights.shape()[0];
  if (weights.shape()[1] != k) {
    throw ShapeError("conv2d kernel must be square, got " + weights.shape().to_string());
  }
  if (stride < 1) throw ArgumentError("conv2d stride must be >= 1");
  if (input.shape()[3] != weights.shape()[2]) {
    throw ShapeError("conv2d channel mismatch: input has " +
                     std::to_string(input.shape()[3]) + ", weights expect " +
                     std::to_string(weights.shape()[2]));
  }
  if (input.shape()[1] < k || input.shape()[2] < k) {
    throw ShapeError("conv2d input " + input.shape().to_string() +
                     " smaller than kernel " + std::to_string(k));
  }
}

// Gathers the valid-convolution patches of sample `n` into `patches`,
// laid out (out_h*out_w, k*k*C) row-major with column index (a*k + b)*C + c.
void im2col(const Tensor& input, int n, int k, int stride, int out_h, int out_w,
            float* patches) {
  const int in_h = input.shape()[1];
  const int in_w = input.shape()[2];
  const int channels = input.shape()[3];
  const size_t row_width = static_cast<size_t>(k) * k * channels;
  const size_t block = static_cast<size_t>(k) * channels;
  const float* base = input.data() + static_cast<size_t>(n) * in_h * in_w * channels;
  for (int i = 0; i < out_h; ++i) {
    for (int j = 0; j < out_w; ++j) {
      float* row = patches + (static_cast<size_t>(i) * out_w + j) * row_width;
      for (int a = 0; a < k; ++a) {
        const float* src =
            base + (static_cast<size_t>(i * stride + a) * in_w + j * stride) * channels;
        std::memcpy(row + static_cast<size_t>(a) * block, src, block * sizeof(float));
      }
    }
  }
}

// Scatter-add of patch gradients back onto sample `n` of `grad_input`;
// overlapping windows accumulate.
void col2im_add(Tensor& grad_input, int n, int k, int stride, int out_h, int out_w,
                const float* patches) {
  const int in_h = grad_input.shape()[1];
  const int in_w = grad_input.shape()[2];
  const int channels = grad_input.shape()[3];
  const size_t row_width = static_cast<size_t>(k) * k * channels;
  const size_t block = static_cast<size_t>(k) * channels;
  float* base = grad_input.data() + static_cast<size_t>(n) * in_h * in_w * channels;
  for (int i = 0; i < out_h; ++i) {
    for (int j = 0; j < out_w; ++j) {
      const float* row = patches + (static_cast<size_t>(i) * out_w + j) * row_width;
      for (int a = 0; a < k; ++a) {
        float* dst =
            base + (static_cast<size_t>(i * stride + a) * in_w + j * stride) * channels;
        const float* src = row + static_cast<size_t>(a) * block;
        for (size_t x = 0; x < block; ++x) dst[x] += src[x];
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

Tensor relu(const Tensor& input) {
  return input.map([](float x) { return x > 0.0f ? x : 0.0f; });
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
  if (input.shape() != grad_out.shape()) {
    throw ShapeError("relu_backward shape mismatch");
  }
  Tensor out(input.shape());
  for (size_t i = 0; i < input.size(); ++i) {
    out[i] = input[i] > 0.0f ? grad_out[i] : 0.0f;
  }
  return out;
}

Tensor sigmoid(const Tensor& input) {
  return input.map(sigmoid_scalar);
}

Tensor sigmoid_backward(const Tensor& input, const Tensor& grad_out) {
  if (input.shape() != grad_out.shape()) {
    throw ShapeError("sigmoid_backward shape mismatch");
  }
  Tensor out(input.shape());
  for (size_t i = 0; i < input.size(); ++i) {
    const float s = sigmoid_scalar(input[i]);
    out[i] = grad_out[i] * s * (1.0f - s);
  }
  return out;
}

Tensor apply_activation(Activation act, const Tensor& preact) {
  switch (act) {
    case Activation::kNone:
      return preact;
    case Activation::kRelu:
      return relu(preact);
    case Activation::kSigmoid:
      return sigmoid(preact);
  }
  throw ArgumentError("unknown activation");
}

Tensor activation_backward(Activation act, const Tensor& preact, const Tensor& grad_out) {
  switch (act) {
    case Activation::kNone:
      return grad_out;
    case Activation::kRelu:
      return relu_backward(preact, grad_out);
    case Activation::kSigmoid:
      return sigmoid_backward(preact, grad_out);
  }
  throw ArgumentError("unknown activation");
}

// ---------------------------------------------------------------------------
// Conv2D kernels
// ---------------------------------------------------------------------------

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      int stride) {
  check_conv_args(input, weights, stride);
  const int batch = input.shape()[0];
  const int k = weights.shape()[0];
  const int channels = weights.shape()[2];
  const int filters = weights.shape()[3];
  const int out_h = conv_output_extent(input.shape()[1], k, stride);
  const int out_w = conv_output_extent(input.shape()[2], k, stride);
  const int patch_cols = k * k * channels;
  const int positions = out_h * out_w;

  Tensor out({batch, out_h, out_w, filters});
  std::vector<float> patches(static_cast<size_t>(positions) * patch_cols);
  ConstMapMat weight_mat(weights.data(), patch_cols, filters);
  ConstMapVec bias_vec(bias.data(), filters);
  for (int n = 0; n < batch; ++n) {
    im2col(input, n, k, stride, out_h, out_w, patches.data());
    ConstMapMat patch_mat(patches.data(), positions, patch_cols);
    MapMat out_mat(out.data() + static_cast<size_t>(n) * positions * filters, positions,
                   filters);
    out_mat.noalias() = patch_mat * weight_mat;
    out_mat.rowwise() += bias_vec.transpose();
  }
  return out;
}

Conv2DGrads conv2d_backward(const Tensor& input, const Tensor& weights,
                            const Tensor& grad_out, int stride) {
  check_conv_args(input, weights, stride);
  const int batch = input.shape()[0];
  const int k = weights.shape()[0];
  const int channels = weights.shape()[2];
  const int filters = weights.shape()[3];
  const int out_h = conv_output_extent(input.shape()[1], k, stride);
  const int out_w = conv_output_extent(input.shape()[2], k, stride);
  if (grad_out.shape() != Shape{batch, out_h, out_w, filters}) {
    throw ShapeError("conv2d_backward grad shape " + grad_out.shape().to_string() +
                     " does not match forward output (" + std::to_string(batch) + "," +
                     std::to_string(out_h) + "," + std::to_string(out_w) + "," +
                     std::to_string(filters) + ")");
  }
  const int patch_cols = k * k * channels;
  const int positions = out_h * out_w;

  Conv2DGrads grads{Tensor(input.shape()), Tensor(weights.shape()), Tensor({filters})};
  std::vector<float> patches(static_cast<size_t>(positions) * patch_cols);
  std::vector<float> patch_grads(patches.size());
  ConstMapMat weight_mat(weights.data(), patch_cols, filters);
  MapMat weight_grad_mat(grads.weights.data(), patch_cols, filters);
  Eigen::Map<Eigen::VectorXf> bias_grad_vec(grads.bias.data(), filters);
  for (int n = 0; n < batch; ++n) {
    ConstMapMat grad_mat(grad_out.data() + static_cast<size_t>(n) * positions * filters,
                         positions, filters);
    bias_grad_vec += grad_mat.colwise().sum().transpose();

    im2col(input, n, k, stride, out_h, out_w, patches.data());
    ConstMapMat patch_mat(patches.data(), positions, patch_cols);
    weight_grad_mat.noalias() += patch_mat.transpose() * grad_mat;

    MapMat patch_grad_mat(patch_grads.data(), positions, patch_cols);
    patch_grad_mat.noalias() = grad_mat * weight_mat.transpose();
    col2im_add(grads.input, n, k, stride, out_h, out_w, patch_grads.data());
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Max pooling kernels
// ---------------------------------------------------------------------------

MaxPoolOut maxpool_forward(const Tensor& input, int pool_size, int stride) {
  if (input.shape().rank() != 4) {
    throw ShapeError("maxpool expects NHWC input, got " + input.shape().to_string());
  }
  if (pool_size < 1 || stride < 1) throw ArgumentError("maxpool pool/stride must be >= 1");
  const int batch = input.shape()[0];
  const int in_h = input.shape()[1];
  const int in_w = input.shape()[2];
  const int channels = input.shape()[3];
  if (in_h < pool_size || in_w < pool_size) {
    throw ShapeError("maxpool window " + std::to_string(pool_size) +
                     " larger than input " + input.shape().to_string());
  }
  const int out_h = conv_output_extent(in_h, pool_size, stride);
  const int out_w = conv_output_extent(in_w, pool_size, stride);

  MaxPoolOut result{Tensor({batch, out_h, out_w, channels}), {}};
  result.argmax.resize(result.output.size());
  const float* in = input.data();
  float* out = result.output.data();
  size_t o = 0;
  for (int n = 0; n < batch; ++n) {
    for (int i = 0; i < out_h; ++i) {
      for (int j = 0; j < out_w; ++j) {
        for (int c = 0; c < channels; ++c) {
          // First-in-scan-order element wins ties.
          int64_t best_idx =
              ((static_cast<int64_t>(n) * in_h + i * stride) * in_w + j * stride) *
                  channels +
              c;
          float best = in[best_idx];
          for (int a = 0; a < pool_size; ++a) {
            for (int b = 0; b < pool_size; ++b) {
              const int64_t idx =
                  ((static_cast<int64_t>(n) * in_h + (i * stride + a)) * in_w +
                   (j * stride + b)) *
                      channels +
                  c;
              if (in[idx] > best) {
                best = in[idx];
                best_idx = idx;
              }
            }
          }
          out[o] = best;
          result.argmax[o] = best_idx;
          ++o;
        }
      }
    }
  }
  return result;
}

Tensor maxpool_backward(const Shape& input_shape, const std::vector<int64_t>& argmax,
                        const Tensor& grad_out) {
  if (argmax.size() != grad_out.size()) {
    throw ShapeError("maxpool_backward argmax/grad size mismatch");
  }
  Tensor grad_input(input_shape);
  for (size_t o = 0; o < argmax.size(); ++o) {
    grad_input[static_cast<size_t>(argmax[o])] += grad_out[o];
  }
  return grad_input;
}

// ---------------------------------------------------------------------------
// Dense kernels
// ---------------------------------------------------------------------------

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  if (input.shape().rank() != 2 || weights.shape().rank() != 2) {
    throw ShapeError("dense expects (N,F) input and (F,U) weights");
  }
  const int batch = input.shape()[0];
  const int features = input.shape()[1];
  const int units = weights.shape()[1];
  if (weights.shape()[0] != features) {
    throw ShapeError("dense feature mismatch: input has " + std::to_string(features) +
                     ", weights expect " + std::to_string(weights.shape()[0]));
  }
  Tensor out({batch, units});
  ConstMapMat in_mat(input.data(), batch, features);
  ConstMapMat weight_mat(weights.data(), features, units);
  ConstMapVec bias_vec(bias.data(), units);
  MapMat out_mat(out.data(), batch, units);
  out_mat.noalias() = in_mat * weight_mat;
  out_mat.rowwise() += bias_vec.transpose();
  return out;
}

DenseGrads dense_backward(const Tensor& input, const Tensor& weights,
                          const Tensor& grad_out) {
  const int batch = input.shape()[0];
  const int features = input.shape()[1];
  const int units = weights.shape()[1];
  if (grad_out.shape() != Shape{batch, units}) {
    throw ShapeError("dense_backward grad shape mismatch");
  }
  DenseGrads grads{Tensor(input.shape()), Tensor(weights.shape()), Tensor({units})};
  ConstMapMat in_mat(input.data(), batch, features);
  ConstMapMat weight_mat(weights.data(), features, units);
  ConstMapMat grad_mat(grad_out.data(), batch, units);
  MapMat(grads.input.data(), batch, features).noalias() = grad_mat * weight_mat.transpose();
  MapMat(grads.weights.data(), features, units).noalias() = in_mat.transpose() * grad_mat;
  Eigen::Map<Eigen::VectorXf>(grads.bias.data(), units) =
      grad_mat.colwise().sum().transpose();
  return grads;
}

// ---------------------------------------------------------------------------
// Conv2DLayer
// ---------------------------------------------------------------------------

Conv2DLayer::Conv2DLayer(int in_channels, int filters, int kernel_size, int stride,
                         Activation act)
    : in_channels_(in_channels),
      filters_(filters),
      kernel_(kernel_size),
      stride_(stride),
      act_(act),
      weights_({kernel_size, kernel_size, in_channels, filters}),
      bias_({filters}) {
  if (kernel_size < 1 || stride < 1 || filters < 1 || in_channels < 1) {
    throw ArgumentError("Conv2D config values must be >= 1");
  }
}

void Conv2DLayer::init_weights(Rng& rng) {
  const float fan_in = static_cast<float>(kernel_) * kernel_ * in_channels_;
  const float fan_out = static_cast<float>(kernel_) * kernel_ * filters_;
  const float limit = std::sqrt(6.0f / (fan_in + fan_out));
  for (float& w : weights_.values()) w = rng.uniform(-limit, limit);
  for (float& b : bias_.values()) b = 0.0f;
}

Tensor Conv2DLayer::forward(const Tensor& input, Mode mode) {
  Tensor z = conv2d_forward(input, weights_, bias_, stride_);
  if (act_ == Activation::kNone) {
    if (mode == Mode::kTraining) preact_ = z;
    return z;
  }
  Tensor out = apply_activation(act_, z);
  if (mode == Mode::kTraining) preact_ = std::move(z);
  return out;
}

Tensor Conv2DLayer::backward(const Tensor& input, const Tensor& grad_out) {
  if (preact_.empty()) throw StateError("Conv2D backward before training-mode forward");
  Tensor grad_z = activation_backward(act_, preact_, grad_out);
  Conv2DGrads grads = conv2d_backward(input, weights_, grad_z, stride_);
  weight_grad_ = std::move(grads.weights);
  bias_grad_ = std::move(grads.bias);
  return std::move(grads.input);
}

std::vector<ParamRef> Conv2DLayer::parameters() {
  if (weight_grad_.empty()) weight_grad_ = Tensor(weights_.shape());
  if (bias_grad_.empty()) bias_grad_ = Tensor(bias_.shape());
  return {{&weights_, &weight_grad_}, {&bias_, &bias_grad_}};
}

size_t Conv2DLayer::param_count() const {
  return weights_.size() + bias_.size();
}

Shape Conv2DLayer::output_shape(const Shape& input) const {
  if (input.rank() != 3) {
    throw BuildError("Conv2D expects (H,W,C) input, got " + input.to_string());
  }
  if (input[2] != in_channels_) {
    throw BuildError("Conv2D channel mismatch: input " + input.to_string() +
                     ", layer expects " + std::to_string(in_channels_) + " channels");
  }
  if (input[0] < kernel_ || input[1] < kernel_) {
    throw BuildError("Conv2D kernel " + std::to_string(kernel_) +
                     " exceeds input " + input.to_string());
  }
  return Shape{conv_output_extent(input[0], kernel_, stride_),
               conv_output_extent(input[1], kernel_, stride_), filters_};
}

// ---------------------------------------------------------------------------
// MaxPool2DLayer
// ---------------------------------------------------------------------------

MaxPool2DLayer::MaxPool2DLayer(int pool_size, int stride)
    : pool_(pool_size), stride_(stride) {
  if (pool_size < 1 || stride < 1) throw ArgumentError("MaxPool config values must be >= 1");
}

Tensor MaxPool2DLayer::forward(const Tensor& input, Mode mode) {
  MaxPoolOut result = maxpool_forward(input, pool_, stride_);
  if (mode == Mode::kTraining) {
    argmax_ = std::move(result.argmax);
    cached_input_shape_ = input.shape();
    has_cache_ = true;
  }
  return std::move(result.output);
}

Tensor MaxPool2DLayer::backward(const Tensor& input, const Tensor& grad_out) {
  if (!has_cache_) throw StateError("MaxPool backward before training-mode forward");
  if (input.shape() != cached_input_shape_) {
    throw ShapeError("MaxPool backward input does not match cached forward input");
  }
  return maxpool_backward(cached_input_shape_, argmax_, grad_out);
}

Shape MaxPool2DLayer::output_shape(const Shape& input) const {
  if (input.rank() != 3) {
    throw BuildError("MaxPool expects (H,W,C) input, got " + input.to_string());
  }
  if (input[0] < pool_ || input[1] < pool_) {
    throw BuildError("MaxPool window " + std::to_string(pool_) + " exceeds input " +
                     input.to_string());
  }
  return Shape{conv_output_extent(input[0], pool_, stride_),
               conv_output_extent(input[1], pool_, stride_), input[2]};
}

// ---------------------------------------------------------------------------
// FlattenLayer
// ---------------------------------------------------------------------------

Tensor FlattenLayer::forward(const Tensor& input, Mode) {
  const int batch = input.shape()[0];
  const int features = static_cast<int>(input.size() / static_cast<size_t>(batch));
  return input.reshaped(Shape{batch, features});
}

Tensor FlattenLayer::backward(const Tensor& input, const Tensor& grad_out) {
  return grad_out.reshaped(input.shape());
}

Shape FlattenLayer::output_shape(const Shape& input) const {
  return Shape{static_cast<int>(input.element_count())};
}

// ---------------------------------------------------------------------------
// DenseLayer
// ---------------------------------------------------------------------------

DenseLayer::DenseLayer(int in_features, int units, Activation act)
    : in_features_(in_features),
      units_(units),
      act_(act),
      weights_({in_features, units}),
      bias_({units}) {
  if (in_features < 1 || units < 1) throw ArgumentError("Dense config values must be >= 1");
}

void DenseLayer::init_weights(Rng& rng) {
  const float limit = std::sqrt(6.0f / (static_cast<float>(in_features_) + units_));
  for (float& w : weights_.values()) w = rng.uniform(-limit, limit);
  for (float& b : bias_.values()) b = 0.0f;
}

Tensor DenseLayer::forward(const Tensor& input, Mode mode) {
  Tensor z = dense_forward(input, weights_, bias_);
  if (act_ == Activation::kNone) {
    if (mode == Mode::kTraining) preact_ = z;
    return z;
  }
  Tensor out = apply_activation(act_, z);
  if (mode == Mode::kTraining) preact_ = std::move(z);
  return out;
}

Tensor DenseLayer::backward(const Tensor& input, const Tensor& grad_out) {
  if (preact_.empty()) throw StateError("Dense backward before training-mode forward");
  Tensor grad_z = activation_backward(act_, preact_, grad_out);
  DenseGrads grads = dense_backward(input, weights_, grad_z);
  weight_grad_ = std::move(grads.weights);
  bias_grad_ = std::move(grads.bias);
  return std::move(grads.input);
}

std::vector<ParamRef> DenseLayer::parameters() {
  if (weight_grad_.empty()) weight_grad_ = Tensor(weights_.shape());
  if (bias_grad_.empty()) bias_grad_ = Tensor(bias_.shape());
  return {{&weights_, &weight_grad_}, {&bias_, &bias_grad_}};
}

size_t DenseLayer::param_count() const {
  return weights_.size() + bias_.size();
}

Shape DenseLayer::output_shape(const Shape& input) const {
  if (input.rank() != 1) {
    throw BuildError("Dense expects flat input, got " + input.to_string());
  }
  if (input[0] != in_features_) {
    throw BuildError("Dense feature mismatch: input " + input.to_string() +
                     ", layer expects " + std::to_string(in_features_));
  }
  return Shape{units_};
}

// ---------------------------------------------------------------------------
// DropoutLayer
// ---------------------------------------------------------------------------

DropoutLayer::DropoutLayer(float rate, uint64_t seed) : rate_(rate), rng_(seed) {
  if (rate < 0.0f || rate >= 1.0f) {
    throw ArgumentError("dropout rate must be in [0,1), got " + std::to_string(rate));
  }
}

Tensor DropoutLayer::forward(const Tensor& input, Mode mode) {
  if (mode == Mode::kInference) {
    return input;
  }
  const float keep_scale = 1.0f / (1.0f - rate_);
  mask_ = Tensor(input.shape());
  Tensor out(input.shape());
  for (size_t i = 0; i < input.size(); ++i) {
    const float keep = rng_.uniform() >= rate_ ? keep_scale : 0.0f;
    mask_[i] = keep;
    out[i] = input[i] * keep;
  }
  has_mask_ = true;
  return out;
}

Tensor DropoutLayer::backward(const Tensor& input, const Tensor& grad_out) {
  if (!has_mask_) throw StateError("Dropout backward before training-mode forward");
  if (grad_out.shape() != mask_.shape()) {
    throw ShapeError("Dropout backward grad does not match cached mask");
  }
  (void)input;
  Tensor grad(grad_out.shape());
  for (size_t i = 0; i < grad.size(); ++i) grad[i] = grad_out[i] * mask_[i];
  return grad;
}

}  // namespace platenet
