#pragma once
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "svh/errors.hpp"

namespace svh {

// Dense row-major tensor. Shapes are small (rank <= 4) and fixed per layer,
// so this stays deliberately minimal: storage plus shape bookkeeping.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(size_t(numel_of(shape)), T(0));
  }
  Tensor(std::initializer_list<int> s) : Tensor(std::vector<int>(s)) {}

  static int64_t numel_of(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
  }

  int64_t numel() const { return int64_t(data.size()); }
  int dim(int i) const { return shape[size_t(i)]; }
  int rank() const { return int(shape.size()); }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  T& operator[](int64_t i) { return data[size_t(i)]; }
  const T& operator[](int64_t i) const { return data[size_t(i)]; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }
  void zero() { fill(T(0)); }

  // Reallocate only when the shape actually changes (workspace reuse).
  void reshape_to(const std::vector<int>& s) {
    if (shape != s) {
      shape = s;
      data.assign(size_t(numel_of(s)), T(0));
    }
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool operator==(const Tensor& o) const {
    return shape == o.shape && data == o.data;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape);
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = U(data[i]);
    return out;
  }
};

template <typename T>
void check_shape(const Tensor<T>& t, const std::vector<int>& want,
                 const char* what) {
  if (t.shape != want) {
    std::string msg = std::string("shape mismatch for ") + what + ": got [";
    for (size_t i = 0; i < t.shape.size(); ++i)
      msg += (i ? "," : "") + std::to_string(t.shape[i]);
    msg += "], want [";
    for (size_t i = 0; i < want.size(); ++i)
      msg += (i ? "," : "") + std::to_string(want[i]);
    msg += "]";
    throw ShapeMismatch(msg);
  }
}

}  // namespace svh
