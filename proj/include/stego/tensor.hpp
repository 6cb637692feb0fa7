#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "stego/error.hpp"
#include "stego/rng.hpp"

namespace stego {

// All floating-point storage is 64-byte aligned. Vectorized kernels (Eigen's
// in particular) peel loops based on runtime pointer alignment, so unaligned
// buffers would make summation order - and therefore bitwise results -
// depend on allocation history.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t alignment = 64;

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(
        ::operator new(n * sizeof(T), std::align_val_t{alignment}));
  }
  void deallocate(T* p, std::size_t) {
    ::operator delete(p, std::align_val_t{alignment});
  }
  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const {
    return true;
  }
};

template <typename T>
using Buffer = std::vector<T, AlignedAllocator<T>>;

template <typename T>
bool operator==(const Buffer<T>& a, const std::vector<T>& b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end());
}
template <typename T>
bool operator==(const std::vector<T>& a, const Buffer<T>& b) {
  return b == a;
}

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// Dense row-major tensor. Rank is arbitrary; images and feature maps use
// [C,H,W]. `grad` is empty until backpropagation touches the tensor, after
// which it has the same length as `data`.
template <typename S>
struct Tensor {
  Shape shape;
  Buffer<S> data;
  bool requires_grad = false;
  Buffer<S> grad;

  Tensor() = default;

  explicit Tensor(Shape s, S fill = S(0))
      : shape(std::move(s)), data(shape_numel(shape), fill) {}

  Tensor(Shape s, Buffer<S> values)
      : shape(std::move(s)), data(std::move(values)) {
    if (data.size() != shape_numel(shape))
      fail(Error::Kind::shape_mismatch,
           "tensor data length " + std::to_string(data.size()) +
               " does not match shape " + shape_str(shape));
  }

  Tensor(Shape s, const std::vector<S>& values)
      : Tensor(std::move(s), Buffer<S>(values.begin(), values.end())) {}

  Tensor(Shape s, std::initializer_list<S> values)
      : Tensor(std::move(s), Buffer<S>(values.begin(), values.end())) {}

  static Tensor scalar(S v) {
    Tensor t(Shape{1});
    t.data[0] = v;
    return t;
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }

  // Rank-3 accessors, [C,H,W].
  S& at(std::size_t c, std::size_t y, std::size_t x) {
    return data[(c * shape[1] + y) * shape[2] + x];
  }
  S at(std::size_t c, std::size_t y, std::size_t x) const {
    return data[(c * shape[1] + y) * shape[2] + x];
  }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), S(0));
  }
  void zero_grad() { std::fill(grad.begin(), grad.end(), S(0)); }

  bool all_finite() const {
    for (S v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  S min_value() const { return *std::min_element(data.begin(), data.end()); }
  S max_value() const { return *std::max_element(data.begin(), data.end()); }
};

template <typename S>
using TensorPtr = std::shared_ptr<Tensor<S>>;

template <typename S>
TensorPtr<S> make_tensor(Shape shape, S fill = S(0)) {
  return std::make_shared<Tensor<S>>(std::move(shape), fill);
}

template <typename S>
TensorPtr<S> make_tensor(Tensor<S> t) {
  return std::make_shared<Tensor<S>>(std::move(t));
}

// Uniform values in [-bound, bound].
template <typename S>
void fill_uniform(Tensor<S>& t, S bound, SplitMix64& rng) {
  for (S& v : t.data)
    v = static_cast<S>((2.0 * rng.next_unit() - 1.0) * static_cast<double>(bound));
}

template <typename T, typename S>
Tensor<T> cast_tensor(const Tensor<S>& t) {
  Tensor<T> out(t.shape);
  for (std::size_t i = 0; i < t.data.size(); ++i)
    out.data[i] = static_cast<T>(t.data[i]);
  return out;
}

inline void check_same_shape(const Shape& a, const Shape& b,
                             const char* what) {
  if (a != b)
    fail(Error::Kind::shape_mismatch,
         std::string(what) + ": expected " + shape_str(a) + ", got " +
             shape_str(b));
}

}  // namespace stego
