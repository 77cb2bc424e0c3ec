#ifndef FSWC_TENSOR_HPP
#define FSWC_TENSOR_HPP

#include <cassert>
#include <cstddef>
#include <utility>
#include <vector>

#include "fswc/error.hpp"

namespace fswc {

// Dense row-major array of doubles, rank 1 to 4. Data length always equals
// the product of the extents. No views or stride tricks: every operation
// that returns a Tensor returns a copy.
//
// A default-constructed Tensor is an empty placeholder (rank 0, no data);
// every factory and operation yields a valid ranked tensor.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const std::vector<int>& shape);
  static Tensor from_data(const std::vector<int>& shape,
                          std::vector<double> data);

  int rank() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return shape_.empty(); }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  // Checked element access, row-major addressing. Rank mismatch or an
  // index outside its extent throws IndexError.
  double get(const std::vector<int>& idx) const;
  void set(const std::vector<int>& idx, double value);

  // Flat access in row-major order. Bounds asserted, not checked.
  double flat(std::size_t i) const {
    assert(i < data_.size());
    return data_[i];
  }
  double& flat(std::size_t i) {
    assert(i < data_.size());
    return data_[i];
  }

  const double* data() const { return data_.data(); }
  double* data() { return data_.data(); }

  // Unchecked fast accessors for kernels that have already validated
  // shapes. Offsets asserted in debug builds only.
  double& at(int i) { return data_[offset1(i)]; }
  double at(int i) const { return data_[offset1(i)]; }
  double& at(int i, int j) { return data_[offset2(i, j)]; }
  double at(int i, int j) const { return data_[offset2(i, j)]; }
  double& at(int i, int j, int k) { return data_[offset3(i, j, k)]; }
  double at(int i, int j, int k) const { return data_[offset3(i, j, k)]; }
  double& at(int i, int j, int k, int l) { return data_[offset4(i, j, k, l)]; }
  double at(int i, int j, int k, int l) const {
    return data_[offset4(i, j, k, l)];
  }

  // Same data, new shape; element counts must agree.
  Tensor reshape(const std::vector<int>& new_shape) const;

  template <typename F>
  Tensor map(F f) const {
    Tensor out = *this;
    for (double& v : out.data_) v = f(v);
    return out;
  }

  template <typename F>
  static Tensor zip(const Tensor& a, const Tensor& b, F f) {
    if (!a.same_shape(b)) {
      throw ShapeError("zip: operand shapes differ");
    }
    Tensor out = a;
    for (std::size_t i = 0; i < out.data_.size(); ++i) {
      out.data_[i] = f(a.data_[i], b.data_[i]);
    }
    return out;
  }

 private:
  std::size_t offset1(int i) const {
    assert(rank() == 1 && i >= 0 && i < shape_[0]);
    return static_cast<std::size_t>(i);
  }
  std::size_t offset2(int i, int j) const {
    assert(rank() == 2 && i >= 0 && i < shape_[0] && j >= 0 && j < shape_[1]);
    return static_cast<std::size_t>(i) * shape_[1] + j;
  }
  std::size_t offset3(int i, int j, int k) const {
    assert(rank() == 3 && i >= 0 && i < shape_[0] && j >= 0 &&
           j < shape_[1] && k >= 0 && k < shape_[2]);
    return (static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k;
  }
  std::size_t offset4(int i, int j, int k, int l) const {
    assert(rank() == 4 && i >= 0 && i < shape_[0] && j >= 0 &&
           j < shape_[1] && k >= 0 && k < shape_[2] && l >= 0 &&
           l < shape_[3]);
    return ((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k) *
               shape_[3] +
           l;
  }

  std::vector<int> shape_;
  std::vector<double> data_;
};

// Element count implied by a shape, after validating it (1 to 4 dims,
// every extent >= 1). Throws ShapeError otherwise.
std::size_t checked_element_count(const std::vector<int>& shape);

}  // namespace fswc

#endif
