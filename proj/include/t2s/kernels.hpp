#pragma once

#include <cstddef>
#include <span>

// Dense inner-loop kernels. Every kernel has a serial reference and an
// OpenMP variant with identical per-element arithmetic order, so both
// produce bit-identical results. The dispatching entry points pick the
// OpenMP variant for large operands outside an enclosing parallel region.

namespace t2s::kernels {

/// Operand size (rows * cols) from which dispatch switches to OpenMP.
inline constexpr std::size_t kParallelThreshold = 1u << 16;

namespace serial {
template <typename T>
void gemv(std::span<const T> W, std::size_t rows, std::size_t cols,
          std::span<const T> x, std::span<T> y, bool accumulate);
template <typename T>
void gemv_t(std::span<const T> W, std::size_t rows, std::size_t cols,
            std::span<const T> x, std::span<T> y, bool accumulate);
template <typename T>
void ger(std::span<T> A, std::size_t rows, std::size_t cols, T alpha,
         std::span<const T> x, std::span<const T> y);
template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y);
}  // namespace serial

namespace omp {
template <typename T>
void gemv(std::span<const T> W, std::size_t rows, std::size_t cols,
          std::span<const T> x, std::span<T> y, bool accumulate);
template <typename T>
void gemv_t(std::span<const T> W, std::size_t rows, std::size_t cols,
            std::span<const T> x, std::span<T> y, bool accumulate);
template <typename T>
void ger(std::span<T> A, std::size_t rows, std::size_t cols, T alpha,
         std::span<const T> x, std::span<const T> y);
template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y);
}  // namespace omp

/// y (+)= W x, W row-major rows x cols.
template <typename T>
void gemv(std::span<const T> W, std::size_t rows, std::size_t cols,
          std::span<const T> x, std::span<T> y, bool accumulate = false);
/// y (+)= W^T x.
template <typename T>
void gemv_t(std::span<const T> W, std::size_t rows, std::size_t cols,
            std::span<const T> x, std::span<T> y, bool accumulate = false);
/// A += alpha * x y^T.
template <typename T>
void ger(std::span<T> A, std::size_t rows, std::size_t cols, T alpha,
         std::span<const T> x, std::span<const T> y);
/// y += alpha * x.
template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y);

}  // namespace t2s::kernels
