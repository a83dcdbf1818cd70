#include "t2s/tensor.hpp"

#include <cmath>
#include <limits>

#include "t2s/kernels.hpp"

namespace t2s {

template <typename T>
Tensor<T> affine(const Tensor<T>& W, const Tensor<T>& x, const Tensor<T>& b) {
  if (x.cols() != 1 || b.cols() != 1 || W.cols() != x.rows() ||
      W.rows() != b.rows()) {
    throw ShapeError("affine: W " + W.shape_string() + ", x " +
                     x.shape_string() + ", b " + b.shape_string());
  }
  Tensor<T> y = b;
  kernels::gemv<T>(W.values(), W.rows(), W.cols(), x.values(), y.values(),
                   true);
  return y;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.values()) v = T(1) / (T(1) + std::exp(-v));
  return y;
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.values()) v = std::tanh(v);
  return y;
}

template <typename T>
Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "hadamard");
  Tensor<T> y = a;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= b[i];
  return y;
}

template <typename T>
Tensor<T> concat(const Tensor<T>& top, const Tensor<T>& bottom) {
  if (top.cols() != 1 || bottom.cols() != 1) {
    throw ShapeError("concat: expected column vectors, got " +
                     top.shape_string() + " and " + bottom.shape_string());
  }
  std::vector<T> data(top.storage());
  data.insert(data.end(), bottom.storage().begin(), bottom.storage().end());
  return Tensor<T>(top.rows() + bottom.rows(), 1, std::move(data));
}

template <typename T>
T log_sum_exp(std::span<const T> v) {
  if (v.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  const T m = *std::max_element(v.begin(), v.end());
  T acc = T(0);
  for (T x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& v) {
  if (v.empty()) throw std::invalid_argument("softmax: empty input");
  Tensor<T> y = v;
  const T m = *std::max_element(y.values().begin(), y.values().end());
  T total = T(0);
  for (auto& x : y.values()) {
    x = std::exp(x - m);
    total += x;
  }
  for (auto& x : y.values()) x /= total;
  return y;
}

template <typename T>
Tensor<T> log_softmax(const Tensor<T>& v) {
  if (v.empty()) throw std::invalid_argument("log_softmax: empty input");
  const T lse = log_sum_exp<T>(v.values());
  Tensor<T> y = v;
  for (auto& x : y.values()) x -= lse;
  return y;
}

template <typename T>
T dot(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw ShapeError("dot: length " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  T acc = T(0);
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
T squared_norm(std::span<const T> a) {
  T acc = T(0);
  for (T x : a) acc += x * x;
  return acc;
}

template <typename T>
bool all_finite(std::span<const T> a) {
  for (T x : a) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

template <typename T>
T global_norm(std::span<Tensor<T>* const> grads) {
  double acc = 0.0;
  for (const Tensor<T>* g : grads) {
    for (T x : g->values()) acc += static_cast<double>(x) * x;
  }
  return static_cast<T>(std::sqrt(acc));
}

template <typename T>
T clip_global_norm(std::span<Tensor<T>* const> grads, T threshold) {
  if (!(threshold > T(0))) {
    throw std::invalid_argument("clip_global_norm: threshold must be positive");
  }
  const T norm = global_norm(grads);
  if (norm > threshold) {
    const T scale = threshold / norm;
    for (Tensor<T>* g : grads) {
      for (auto& x : g->values()) x *= scale;
    }
  }
  return norm;
}

#define T2S_INSTANTIATE_TENSOR(T)                                             \
  template Tensor<T> affine(const Tensor<T>&, const Tensor<T>&,              \
                            const Tensor<T>&);                               \
  template Tensor<T> sigmoid(const Tensor<T>&);                              \
  template Tensor<T> tanh(const Tensor<T>&);                                 \
  template Tensor<T> hadamard(const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> concat(const Tensor<T>&, const Tensor<T>&);             \
  template Tensor<T> softmax(const Tensor<T>&);                              \
  template Tensor<T> log_softmax(const Tensor<T>&);                          \
  template T log_sum_exp(std::span<const T>);                                \
  template T dot(std::span<const T>, std::span<const T>);                    \
  template T squared_norm(std::span<const T>);                               \
  template bool all_finite(std::span<const T>);                              \
  template T global_norm(std::span<Tensor<T>* const>);                       \
  template T clip_global_norm(std::span<Tensor<T>* const>, T);

T2S_INSTANTIATE_TENSOR(float)
T2S_INSTANTIATE_TENSOR(double)
T2S_INSTANTIATE_TENSOR(long double)

}  // namespace t2s
