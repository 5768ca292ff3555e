#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "xgrasp/errors.hpp"

namespace xgrasp {

/// Dense row-major tensor of 64-bit floats.
///
/// The validating constructor rejects NaN/Inf and shape/size mismatches;
/// factory helpers (zeros/full) are trivially finite. Internal kernels write
/// through data() and keep values finite by construction.
class Tensor {
 public:
  Tensor() : shape_{}, data_{0.0} {}  // scalar zero

  Tensor(std::vector<int> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (count(shape_) != data_.size()) {
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_string(shape_));
    }
    for (double v : data_) {
      if (!std::isfinite(v)) {
        throw ValidationError("tensor rejects non-finite value");
      }
    }
  }

  static Tensor zeros(std::vector<int> shape) {
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_.assign(count(t.shape_), 0.0);
    return t;
  }

  static Tensor full(std::vector<int> shape, double value) {
    if (!std::isfinite(value)) throw ValidationError("tensor rejects non-finite value");
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_.assign(count(t.shape_), value);
    return t;
  }

  static Tensor scalar(double value) { return full({}, value); }

  static Tensor empty() {
    Tensor t;
    t.shape_ = {0};
    t.data_.clear();
    return t;
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  std::size_t size() const { return data_.size(); }
  bool is_scalar() const { return shape_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // [C,H,W] indexing for image-like tensors.
  double& at3(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }
  double at3(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  static std::size_t count(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
      if (d < 0) throw DimensionError("negative dimension");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  static std::string shape_string(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) os << ",";
      os << shape[i];
    }
    os << "]";
    return os.str();
  }

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": shape " + Tensor::shape_string(a.shape()) +
                         " vs " + Tensor::shape_string(b.shape()));
  }
}

}  // namespace xgrasp
