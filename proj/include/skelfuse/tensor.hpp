#pragma once

#include <cassert>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "skelfuse/rng.hpp"

namespace skelfuse {

/// Dense row-major tensor of rank <= 3.
template <class S>
struct Tensor {
  std::vector<int> shape;
  std::vector<S> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> shp) : shape(std::move(shp)) {
    data.assign(static_cast<std::size_t>(count(shape)), S(0));
  }
  Tensor(std::vector<int> shp, std::vector<S> d) : shape(std::move(shp)), data(std::move(d)) {
    assert(static_cast<std::int64_t>(data.size()) == count(shape));
  }

  static std::int64_t count(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int d : s) n *= d;
    return n;
  }

  std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  /// Rows when viewed as a matrix [rows, last_dim].
  std::int64_t rows() const { return size() / shape.back(); }
  int cols() const { return shape.back(); }

  S* ptr() { return data.data(); }
  const S* ptr() const { return data.data(); }

  S& at(int i) { return data[static_cast<std::size_t>(i)]; }
  S& at(int i, int j) { return data[static_cast<std::size_t>(i) * shape[1] + j]; }
  S& at(int i, int j, int k) {
    return data[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k];
  }
  S at(int i) const { return data[static_cast<std::size_t>(i)]; }
  S at(int i, int j) const { return data[static_cast<std::size_t>(i) * shape[1] + j]; }
  S at(int i, int j, int k) const {
    return data[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k];
  }

  void fill(S v) { std::fill(data.begin(), data.end(), v); }

  template <class T>
  Tensor<T> cast() const {
    Tensor<T> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<T>(data[i]);
    return out;
  }
};

/// Named trainable tensor with its gradient accumulator.
template <class S>
struct Param {
  std::string key;
  Tensor<S> value;
  Tensor<S> grad;

  void init_uniform(Rng& rng, double bound) {
    for (auto& v : value.data) v = static_cast<S>(rng.uniform(-bound, bound));
    grad = Tensor<S>(value.shape);
  }
  void init_zero() {
    value.fill(S(0));
    grad = Tensor<S>(value.shape);
  }
  void zero_grad() { grad.fill(S(0)); }
};

}  // namespace skelfuse
