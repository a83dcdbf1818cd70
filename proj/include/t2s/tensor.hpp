#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace t2s {

/// Raised when operand shapes do not conform.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major matrix. Column vectors are rows x 1.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_string());
    }
  }

  static Tensor column(std::initializer_list<T> values) {
    return Tensor(values.size(), 1, std::vector<T>(values));
  }
  static Tensor zeros_like(const Tensor& other) {
    return Tensor(other.rows_, other.cols_);
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  const std::vector<T>& storage() const { return data_; }

  /// Contiguous block of rows [first, first + count) viewed as a column.
  std::span<const T> segment(std::size_t first, std::size_t count) const {
    return {data_.data() + first, count};
  }
  std::span<T> segment(std::size_t first, std::size_t count) {
    return {data_.data() + first, count};
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  void set_zero() { fill(T(0)); }

  bool same_shape(const Tensor& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b,
                        std::string_view op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() +
                     " vs " + b.shape_string());
  }
}

template <typename T>
Tensor<T> affine(const Tensor<T>& W, const Tensor<T>& x, const Tensor<T>& b);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);
template <typename T>
Tensor<T> tanh(const Tensor<T>& x);
template <typename T>
Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b);
/// Vertical concatenation of two column vectors.
template <typename T>
Tensor<T> concat(const Tensor<T>& top, const Tensor<T>& bottom);

/// Max-subtracted softmax over a column vector.
template <typename T>
Tensor<T> softmax(const Tensor<T>& v);
/// log-softmax via log-sum-exp.
template <typename T>
Tensor<T> log_softmax(const Tensor<T>& v);
template <typename T>
T log_sum_exp(std::span<const T> v);

template <typename T>
T dot(std::span<const T> a, std::span<const T> b);
template <typename T>
T squared_norm(std::span<const T> a);
template <typename T>
bool all_finite(std::span<const T> a);

/// Joint L2 norm over every tensor; if it exceeds threshold every tensor is
/// scaled by threshold / norm. Returns the norm before clipping.
template <typename T>
T clip_global_norm(std::span<Tensor<T>* const> grads, T threshold);
template <typename T>
T global_norm(std::span<Tensor<T>* const> grads);

}  // namespace t2s
