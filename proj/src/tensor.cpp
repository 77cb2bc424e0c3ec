#include "fswc/tensor.hpp"

#include <numeric>
#include <string>

namespace fswc {

namespace {

std::string shape_to_string(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace

std::size_t checked_element_count(const std::vector<int>& shape) {
  if (shape.empty() || shape.size() > 4) {
    throw ShapeError("tensor rank must be 1..4, got " +
                     std::to_string(shape.size()));
  }
  std::size_t count = 1;
  for (int extent : shape) {
    if (extent < 1) {
      throw ShapeError("tensor extent must be >= 1 in shape " +
                       shape_to_string(shape));
    }
    count *= static_cast<std::size_t>(extent);
  }
  return count;
}

Tensor Tensor::zeros(const std::vector<int>& shape) {
  Tensor t;
  const std::size_t count = checked_element_count(shape);
  t.shape_ = shape;
  t.data_.assign(count, 0.0);
  return t;
}

Tensor Tensor::from_data(const std::vector<int>& shape,
                         std::vector<double> data) {
  const std::size_t count = checked_element_count(shape);
  if (data.size() != count) {
    throw ShapeError("from_data: " + std::to_string(data.size()) +
                     " values for shape " + shape_to_string(shape));
  }
  Tensor t;
  t.shape_ = shape;
  t.data_ = std::move(data);
  return t;
}

double Tensor::get(const std::vector<int>& idx) const {
  if (idx.size() != shape_.size()) {
    throw IndexError("get: " + std::to_string(idx.size()) +
                     " indices for rank-" + std::to_string(shape_.size()) +
                     " tensor");
  }
  std::size_t offset = 0;
  for (std::size_t d = 0; d < idx.size(); ++d) {
    if (idx[d] < 0 || idx[d] >= shape_[d]) {
      throw IndexError("get: index " + std::to_string(idx[d]) +
                       " out of bounds for extent " +
                       std::to_string(shape_[d]) + " (dim " +
                       std::to_string(d) + ")");
    }
    offset = offset * static_cast<std::size_t>(shape_[d]) +
             static_cast<std::size_t>(idx[d]);
  }
  return data_[offset];
}

void Tensor::set(const std::vector<int>& idx, double value) {
  if (idx.size() != shape_.size()) {
    throw IndexError("set: " + std::to_string(idx.size()) +
                     " indices for rank-" + std::to_string(shape_.size()) +
                     " tensor");
  }
  std::size_t offset = 0;
  for (std::size_t d = 0; d < idx.size(); ++d) {
    if (idx[d] < 0 || idx[d] >= shape_[d]) {
      throw IndexError("set: index " + std::to_string(idx[d]) +
                       " out of bounds for extent " +
                       std::to_string(shape_[d]) + " (dim " +
                       std::to_string(d) + ")");
    }
    offset = offset * static_cast<std::size_t>(shape_[d]) +
             static_cast<std::size_t>(idx[d]);
  }
  data_[offset] = value;
}

Tensor Tensor::reshape(const std::vector<int>& new_shape) const {
  const std::size_t count = checked_element_count(new_shape);
  if (count != data_.size()) {
    throw ShapeError("reshape: cannot view " + std::to_string(data_.size()) +
                     " elements as shape " + shape_to_string(new_shape));
  }
  Tensor t;
  t.shape_ = new_shape;
  t.data_ = data_;
  return t;
}

}  // namespace fswc
