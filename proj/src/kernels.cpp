#include "windvr/kernels.hpp"

#include <cmath>
#include <cstring>

namespace windvr::kernels {

// C[i,j] = sum_k A[i,k] B[k,j], row-major. The k-loop runs in fixed ascending
// order for every output element (bit-determinism contract), so the only
// freedom is which thread owns which output row.
#define MATMUL_BODY(PRAGMA)                                                   \
    PRAGMA                                                                    \
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {     \
        double* ci = c + static_cast<std::size_t>(i) * n;                     \
        const double* ai = a + static_cast<std::size_t>(i) * k;               \
        std::memset(ci, 0, n * sizeof(double));                               \
        for (std::size_t p = 0; p < k; ++p) {                                 \
            const double av = ai[p];                                          \
            const double* bp = b + p * n;                                     \
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];          \
        }                                                                     \
    }

namespace serial {

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n) {
    MATMUL_BODY()
}

void add(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void silu(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] / (1.0 + std::exp(-x[i]));
}

void softmax_rows(const double* x, double* out, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xi = x + r * cols;
        double* oi = out + r * cols;
        double mx = xi[0];
        for (std::size_t j = 1; j < cols; ++j) mx = xi[j] > mx ? xi[j] : mx;
        double sum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            oi[j] = std::exp(xi[j] - mx);
            sum += oi[j];
        }
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < cols; ++j) oi[j] *= inv;
    }
}

} // namespace serial

namespace omp {

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n) {
    MATMUL_BODY(_Pragma("omp parallel for schedule(static)"))
}

void add(const double* a, const double* b, double* out, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        out[i] = a[i] + b[i];
}

void silu(const double* x, double* out, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        out[i] = x[i] / (1.0 + std::exp(-x[i]));
}

void softmax_rows(const double* x, double* out, std::size_t rows, std::size_t cols) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
        const double* xi = x + static_cast<std::size_t>(r) * cols;
        double* oi = out + static_cast<std::size_t>(r) * cols;
        double mx = xi[0];
        for (std::size_t j = 1; j < cols; ++j) mx = xi[j] > mx ? xi[j] : mx;
        double sum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            oi[j] = std::exp(xi[j] - mx);
            sum += oi[j];
        }
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < cols; ++j) oi[j] *= inv;
    }
}

} // namespace omp

#undef MATMUL_BODY

} // namespace windvr::kernels
