#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <vector>

#include "wenets/common.hpp"

namespace wenets {

// Dense row-major tensor of rank 1-3. Conv inputs are [N, C, L],
// dense inputs [N, F]. Nothing fancy: shape + flat storage.
template <typename T>
struct Tensor {
  std::vector<size_t> shape;
  std::vector<T> v;

  Tensor() = default;
  explicit Tensor(std::vector<size_t> s) : shape(std::move(s)), v(numel_of(shape)) {}
  Tensor(std::initializer_list<size_t> s) : Tensor(std::vector<size_t>(s)) {}

  static size_t numel_of(const std::vector<size_t>& s) {
    size_t n = 1;
    for (size_t d : s) n *= d;
    return s.empty() ? 0 : n;
  }

  size_t numel() const { return v.size(); }
  size_t rank() const { return shape.size(); }
  size_t dim(size_t i) const { return shape[i]; }

  T* data() { return v.data(); }
  const T* data() const { return v.data(); }

  T& operator()(size_t n, size_t c, size_t l) {
    return v[(n * shape[1] + c) * shape[2] + l];
  }
  const T& operator()(size_t n, size_t c, size_t l) const {
    return v[(n * shape[1] + c) * shape[2] + l];
  }
  T& operator()(size_t n, size_t f) { return v[n * shape[1] + f]; }
  const T& operator()(size_t n, size_t f) const { return v[n * shape[1] + f]; }
  T& operator[](size_t i) { return v[i]; }
  const T& operator[](size_t i) const { return v[i]; }

  void fill(T x) { std::fill(v.begin(), v.end(), x); }

  void resize(std::vector<size_t> s) {
    shape = std::move(s);
    v.resize(numel_of(shape));
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (const T& x : v) {
      if (!std::isfinite(static_cast<double>(x))) return false;
    }
    return true;
  }

  std::string shape_str() const {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ']';
    return os.str();
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape);
    for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
    return out;
  }
};

template <typename T>
inline void require_shape(const Tensor<T>& t, const std::vector<size_t>& want,
                          const char* what) {
  if (t.shape != want) {
    Tensor<T> w;
    w.shape = want;
    throw ShapeError(std::string(what) + ": got " + t.shape_str() + ", want " +
                     w.shape_str());
  }
}

}  // namespace wenets
