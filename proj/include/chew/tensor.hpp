#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace chew {

/// Dense n-dimensional numeric array, row-major, owned storage.
template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> dims)
      : shape(std::move(dims)), data(numel(shape), T{}) {}

  Tensor(std::vector<std::size_t> dims, std::vector<T> values)
      : shape(std::move(dims)), data(std::move(values)) {
    if (data.size() != numel(shape))
      throw std::invalid_argument("Tensor: data size does not match shape");
  }

  static std::size_t numel(const std::vector<std::size_t>& dims) {
    std::size_t n = 1;
    for (std::size_t d : dims) n *= d;
    return n;
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }

  std::size_t dim(std::size_t i) const {
    if (i >= shape.size()) throw std::out_of_range("Tensor::dim: axis out of range");
    return shape[i];
  }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }

  // rank-checked element access, used mostly by tests and small code paths
  T& operator()(std::size_t i, std::size_t j) {
    check_rank(2);
    return data[i * shape[1] + j];
  }
  const T& operator()(std::size_t i, std::size_t j) const {
    check_rank(2);
    return data[i * shape[1] + j];
  }
  T& operator()(std::size_t i, std::size_t j, std::size_t k) {
    check_rank(3);
    return data[(i * shape[1] + j) * shape[2] + k];
  }
  const T& operator()(std::size_t i, std::size_t j, std::size_t k) const {
    check_rank(3);
    return data[(i * shape[1] + j) * shape[2] + k];
  }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  bool all_finite() const {
    for (const T& v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

 private:
  void check_rank(std::size_t r) const {
    if (shape.size() != r)
      throw std::invalid_argument("Tensor: expected rank " + std::to_string(r) +
                                  ", have rank " + std::to_string(shape.size()));
  }
};

std::string shape_to_string(const std::vector<std::size_t>& dims);

}  // namespace chew
