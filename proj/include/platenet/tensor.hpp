#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "platenet/errors.hpp"

namespace platenet {

// Extents of a rank-1..4 tensor. The batch dimension N is always an
// explicit leading axis at call sites, never part of a layer's config.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<int> dims) : Shape(std::vector<int>(dims)) {}
  explicit Shape(std::vector<int> dims);

  int rank() const { return static_cast<int>(dims_.size()); }
  int operator[](int axis) const { return dims_[static_cast<size_t>(axis)]; }
  const std::vector<int>& dims() const { return dims_; }
  size_t element_count() const;
  std::string to_string() const;  // "(300,300,1)"

  bool operator==(const Shape&) const = default;

 private:
  std::vector<int> dims_;
};

// Dense row-major array of 32-bit reals, last axis fastest.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(const Shape& shape)
      : shape_(shape), data_(shape.element_count(), 0.0f) {}
  Tensor(const Shape& shape, std::vector<float> data);

  static Tensor zeros(const Shape& shape) { return Tensor(shape); }
  static Tensor full(const Shape& shape, float value);

  const Shape& shape() const { return shape_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }

  float& operator[](size_t i) { return data_[i]; }
  float operator[](size_t i) const { return data_[i]; }

  // Multidimensional accessors; rank is checked, indices are not.
  float& at(int i);
  float& at(int i, int j);
  float& at(int i, int j, int k);
  float& at(int i, int j, int k, int l);
  float at(int i) const { return const_cast<Tensor*>(this)->at(i); }
  float at(int i, int j) const { return const_cast<Tensor*>(this)->at(i, j); }
  float at(int i, int j, int k) const { return const_cast<Tensor*>(this)->at(i, j, k); }
  float at(int i, int j, int k, int l) const {
    return const_cast<Tensor*>(this)->at(i, j, k, l);
  }

  // out[i] = f(in[i]) for every linear index.
  Tensor map(const std::function<float(float)>& f) const;

  // Same data, new shape; element counts must match.
  Tensor reshaped(const Shape& new_shape) const;

  // this += scale * src, elementwise.
  void accumulate(const Tensor& src, float scale);

  bool all_finite() const;

 private:
  Shape shape_;
  std::vector<float> data_;
};

}  // namespace platenet
