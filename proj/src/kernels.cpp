#include "t2s/kernels.hpp"

#include <omp.h>

namespace t2s::kernels {

namespace {

bool use_parallel(std::size_t work) {
  return work >= kParallelThreshold && !omp_in_parallel() &&
         omp_get_max_threads() > 1;
}

template <typename T>
T row_dot(const T* w, const T* x, std::size_t n) {
  T acc = T(0);
  for (std::size_t c = 0; c < n; ++c) acc += w[c] * x[c];
  return acc;
}

}  // namespace

namespace serial {

template <typename T>
void gemv(std::span<const T> W, std::size_t rows, std::size_t cols,
          std::span<const T> x, std::span<T> y, bool accumulate) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T v = row_dot(W.data() + r * cols, x.data(), cols);
    y[r] = accumulate ? y[r] + v : v;
  }
}

template <typename T>
void gemv_t(std::span<const T> W, std::size_t rows, std::size_t cols,
            std::span<const T> x, std::span<T> y, bool accumulate) {
  if (!accumulate) std::fill(y.begin(), y.end(), T(0));
  for (std::size_t r = 0; r < rows; ++r) {
    const T xr = x[r];
    if (xr == T(0)) continue;
    const T* w = W.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) y[c] += w[c] * xr;
  }
}

template <typename T>
void ger(std::span<T> A, std::size_t rows, std::size_t cols, T alpha,
         std::span<const T> x, std::span<const T> y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T s = alpha * x[r];
    if (s == T(0)) continue;
    T* a = A.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) a[c] += s * y[c];
  }
}

template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace serial

namespace omp {

template <typename T>
void gemv(std::span<const T> W, std::size_t rows, std::size_t cols,
          std::span<const T> x, std::span<T> y, bool accumulate) {
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const T v = row_dot(W.data() + r * cols, x.data(), cols);
    y[r] = accumulate ? y[r] + v : v;
  }
}

template <typename T>
void gemv_t(std::span<const T> W, std::size_t rows, std::size_t cols,
            std::span<const T> x, std::span<T> y, bool accumulate) {
  // Each thread owns a contiguous block of output columns and sweeps the
  // rows in serial order, so every y[c] sees the same sum as the reference.
  if (!accumulate) std::fill(y.begin(), y.end(), T(0));
#pragma omp parallel
  {
    const auto nt = static_cast<std::size_t>(omp_get_num_threads());
    const auto t = static_cast<std::size_t>(omp_get_thread_num());
    const std::size_t c0 = cols * t / nt, c1 = cols * (t + 1) / nt;
    for (std::size_t r = 0; r < rows; ++r) {
      const T xr = x[r];
      if (xr == T(0)) continue;
      const T* w = W.data() + r * cols;
      for (std::size_t c = c0; c < c1; ++c) y[c] += w[c] * xr;
    }
  }
}

template <typename T>
void ger(std::span<T> A, std::size_t rows, std::size_t cols, T alpha,
         std::span<const T> x, std::span<const T> y) {
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const T s = alpha * x[r];
    if (s == T(0)) continue;
    T* a = A.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) a[c] += s * y[c];
  }
}

template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y) {
  const auto n = static_cast<std::ptrdiff_t>(y.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace omp

template <typename T>
void gemv(std::span<const T> W, std::size_t rows, std::size_t cols,
          std::span<const T> x, std::span<T> y, bool accumulate) {
  if (use_parallel(rows * cols)) {
    omp::gemv(W, rows, cols, x, y, accumulate);
  } else {
    serial::gemv(W, rows, cols, x, y, accumulate);
  }
}

template <typename T>
void gemv_t(std::span<const T> W, std::size_t rows, std::size_t cols,
            std::span<const T> x, std::span<T> y, bool accumulate) {
  if (use_parallel(rows * cols)) {
    omp::gemv_t(W, rows, cols, x, y, accumulate);
  } else {
    serial::gemv_t(W, rows, cols, x, y, accumulate);
  }
}

template <typename T>
void ger(std::span<T> A, std::size_t rows, std::size_t cols, T alpha,
         std::span<const T> x, std::span<const T> y) {
  if (use_parallel(rows * cols)) {
    omp::ger(A, rows, cols, alpha, x, y);
  } else {
    serial::ger(A, rows, cols, alpha, x, y);
  }
}

template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y) {
  if (use_parallel(y.size())) {
    omp::axpy(alpha, x, y);
  } else {
    serial::axpy(alpha, x, y);
  }
}

#define T2S_INSTANTIATE_KERNELS(NS, T)                                        \
  template void NS::gemv<T>(std::span<const T>, std::size_t, std::size_t,    \
                            std::span<const T>, std::span<T>, bool);         \
  template void NS::gemv_t<T>(std::span<const T>, std::size_t, std::size_t,  \
                              std::span<const T>, std::span<T>, bool);       \
  template void NS::ger<T>(std::span<T>, std::size_t, std::size_t, T,        \
                           std::span<const T>, std::span<const T>);          \
  template void NS::axpy<T>(T, std::span<const T>, std::span<T>);

T2S_INSTANTIATE_KERNELS(serial, float)
T2S_INSTANTIATE_KERNELS(serial, double)
T2S_INSTANTIATE_KERNELS(omp, float)
T2S_INSTANTIATE_KERNELS(omp, double)
T2S_INSTANTIATE_KERNELS(serial, long double)
T2S_INSTANTIATE_KERNELS(omp, long double)

template void gemv<float>(std::span<const float>, std::size_t, std::size_t,
                          std::span<const float>, std::span<float>, bool);
template void gemv<double>(std::span<const double>, std::size_t, std::size_t,
                           std::span<const double>, std::span<double>, bool);
template void gemv_t<float>(std::span<const float>, std::size_t, std::size_t,
                            std::span<const float>, std::span<float>, bool);
template void gemv_t<double>(std::span<const double>, std::size_t,
                             std::size_t, std::span<const double>,
                             std::span<double>, bool);
template void ger<float>(std::span<float>, std::size_t, std::size_t, float,
                         std::span<const float>, std::span<const float>);
template void ger<double>(std::span<double>, std::size_t, std::size_t, double,
                          std::span<const double>, std::span<const double>);
template void axpy<float>(float, std::span<const float>, std::span<float>);
template void axpy<double>(double, std::span<const double>,
                           std::span<double>);
template void gemv<long double>(std::span<const long double>, std::size_t,
                                std::size_t, std::span<const long double>,
                                std::span<long double>, bool);
template void gemv_t<long double>(std::span<const long double>, std::size_t,
                                  std::size_t, std::span<const long double>,
                                  std::span<long double>, bool);
template void ger<long double>(std::span<long double>, std::size_t, std::size_t,
                               long double, std::span<const long double>,
                               std::span<const long double>);
template void axpy<long double>(long double, std::span<const long double>,
                                std::span<long double>);

}  // namespace t2s::kernels
