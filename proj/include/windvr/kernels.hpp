#pragma once

#include <cstddef>

// Low-level dense kernels. Each kernel has a serial reference version and an
// OpenMP version that parallelizes only across output elements; the per-element
// accumulation order is identical in both, so results are bitwise equal.

namespace windvr::kernels {

namespace serial {
void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n);
void add(const double* a, const double* b, double* out, std::size_t n);
void silu(const double* x, double* out, std::size_t n);
void softmax_rows(const double* x, double* out, std::size_t rows, std::size_t cols);
} // namespace serial

namespace omp {
void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n);
void add(const double* a, const double* b, double* out, std::size_t n);
void silu(const double* x, double* out, std::size_t n);
void softmax_rows(const double* x, double* out, std::size_t rows, std::size_t cols);
} // namespace omp

// Default dispatch used by the tensor library.
inline void matmul(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n) {
    omp::matmul(a, b, c, m, k, n);
}
inline void softmax_rows(const double* x, double* out, std::size_t rows, std::size_t cols) {
    omp::softmax_rows(x, out, rows, cols);
}

} // namespace windvr::kernels
