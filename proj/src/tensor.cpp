#include "platenet/tensor.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace platenet {

Shape::Shape(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.empty() || dims_.size() > 4) {
    throw ShapeError("shape rank must be 1..4, got " + std::to_string(dims_.size()));
  }
  for (int d : dims_) {
    if (d < 1) {
      throw ShapeError("shape extents must be >= 1, got " + to_string());
    }
  }
  // Reject element counts that overflow size_t.
  size_t count = 1;
  for (int d : dims_) {
    const auto extent = static_cast<size_t>(d);
    if (count > std::numeric_limits<size_t>::max() / extent) {
      throw SizeError("element count overflow for shape " + to_string());
    }
    count *= extent;
  }
}

size_t Shape::element_count() const {
  size_t count = 1;
  for (int d : dims_) count *= static_cast<size_t>(d);
  return count;
}

std::string Shape::to_string() const {
  std::string s = "(";
  for (size_t i = 0; i < dims_.size(); ++i) {
    if (i > 0) s += ",";
    s += std::to_string(dims_[i]);
  }
  return s + ")";
}

Tensor::Tensor(const Shape& shape, std::vector<float> data)
    : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.element_count()) {
    throw ShapeError("data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_.to_string());
  }
}

Tensor Tensor::full(const Shape& shape, float value) {
  Tensor t(shape);
  for (float& v : t.data_) v = value;
  return t;
}

float& Tensor::at(int i) {
  if (shape_.rank() != 1) throw ShapeError("rank-1 access on shape " + shape_.to_string());
  return data_[static_cast<size_t>(i)];
}

float& Tensor::at(int i, int j) {
  if (shape_.rank() != 2) throw ShapeError("rank-2 access on shape " + shape_.to_string());
  return data_[static_cast<size_t>(i) * shape_[1] + j];
}

float& Tensor::at(int i, int j, int k) {
  if (shape_.rank() != 3) throw ShapeError("rank-3 access on shape " + shape_.to_string());
  return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
}

float& Tensor::at(int i, int j, int k, int l) {
  if (shape_.rank() != 4) throw ShapeError("rank-4 access on shape " + shape_.to_string());
  return data_[((static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
}

Tensor Tensor::map(const std::function<float(float)>& f) const {
  Tensor out(shape_);
  for (size_t i = 0; i < data_.size(); ++i) out.data_[i] = f(data_[i]);
  return out;
}

Tensor Tensor::reshaped(const Shape& new_shape) const {
  if (new_shape.element_count() != data_.size()) {
    throw ShapeError("cannot reshape " + shape_.to_string() + " (" +
                     std::to_string(data_.size()) + " elements) to " +
                     new_shape.to_string());
  }
  return Tensor(new_shape, data_);
}

void Tensor::accumulate(const Tensor& src, float scale) {
  if (src.shape_ != shape_) {
    throw ShapeError("accumulate shape mismatch: " + shape_.to_string() + " vs " +
                     src.shape_.to_string());
  }
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += scale * src.data_[i];
}

bool Tensor::all_finite() const {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace platenet
