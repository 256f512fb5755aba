#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "platenet/layers.hpp"
#include "platenet/tensor.hpp"

namespace platenet {

// ---------------------------------------------------------------------------
// Architecture description
// ---------------------------------------------------------------------------

struct Conv2DConfig {
  int filters;
  int kernel_size;
  int stride;
  Activation activation = Activation::kNone;
  bool operator==(const Conv2DConfig&) const = default;
};

struct MaxPool2DConfig {
  int pool_size;
  int stride;
  bool operator==(const MaxPool2DConfig&) const = default;
};

struct FlattenConfig {
  bool operator==(const FlattenConfig&) const = default;
};

struct DenseConfig {
  int units;
  Activation activation = Activation::kNone;
  bool operator==(const DenseConfig&) const = default;
};

struct DropoutConfig {
  float rate;
  bool operator==(const DropoutConfig&) const = default;
};

using LayerConfig =
    std::variant<Conv2DConfig, MaxPool2DConfig, FlattenConfig, DenseConfig, DropoutConfig>;

struct ModelSpec {
  int height = 300;
  int width = 300;
  int channels = 1;
  std::vector<LayerConfig> layers;

  // The classifier stack: Conv2D(32,k3,s2)+ReLU -> MaxPool(2,s2) ->
  // Conv2D(16,k3,s2)+ReLU -> MaxPool(2,s2) -> Flatten -> Dense(128)+ReLU ->
  // Dropout(0.2) -> Dense(64)+ReLU -> Dropout(0.2) -> Dense(1)+sigmoid.
  static ModelSpec standard(int image_size = 300, int channels = 1);

  bool operator==(const ModelSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Summary
// ---------------------------------------------------------------------------

struct SummaryRow {
  std::string name;    // "conv2d (Conv2D)"
  Shape output_shape;  // per-example, batch axis omitted
  size_t param_count;
};

struct Summary {
  std::vector<SummaryRow> rows;
  size_t total_params = 0;
  size_t trainable_params = 0;
  size_t non_trainable_params = 0;

  std::string to_string() const;
};

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

class Model {
 public:
  Model() = default;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  // Instantiates the layer chain and initializes weights deterministically
  // from `seed`. Throws BuildError when the chain is shape-inconsistent.
  static Model build(const ModelSpec& spec, uint64_t seed);

  // (N,H,W,C) -> (N,1) for the standard spec. Training mode caches the
  // per-layer inputs needed by backward.
  Tensor forward(const Tensor& batch, Mode mode);

  // Backprop from d(loss)/d(output); requires a preceding training-mode
  // forward. Returns the gradient wrt the input batch and fills every
  // layer's parameter gradient slots.
  Tensor backward(const Tensor& grad_out);

  std::vector<ParamRef> parameters();
  Summary summary() const;
  const ModelSpec& spec() const { return spec_; }
  size_t layer_count() const { return layers_.size(); }
  Layer& layer(size_t i) { return *layers_[i]; }

  // Weight checkpoint I/O (.pnw). load() either returns a fully
  // reconstructed model or throws; no partial state escapes.
  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);

  // Deep copy of configuration and weights (layer caches are not copied).
  Model clone() const;

 private:
  ModelSpec spec_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<Tensor> inputs_;  // per-layer inputs from the last training forward
  bool has_forward_state_ = false;
};

const char* activation_name(Activation act);

}  // namespace platenet
