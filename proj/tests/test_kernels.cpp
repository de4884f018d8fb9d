#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "windvr/kernels.hpp"
#include "windvr/rng.hpp"

using namespace windvr;

TEST_CASE("omp kernels are bitwise equal to the serial reference") {
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t m = rng.uniform_int(1, 33);
        const std::size_t k = rng.uniform_int(1, 33);
        const std::size_t n = rng.uniform_int(1, 33);
        std::vector<double> a(m * k), b(k * n), c0(m * n), c1(m * n);
        for (auto& v : a) v = rng.normal();
        for (auto& v : b) v = rng.normal();
        kernels::serial::matmul(a.data(), b.data(), c0.data(), m, k, n);
        kernels::omp::matmul(a.data(), b.data(), c1.data(), m, k, n);
        CHECK(c0 == c1);

        std::vector<double> x(m * n), s0(m * n), s1(m * n);
        for (auto& v : x) v = rng.normal() * 4.0;
        kernels::serial::softmax_rows(x.data(), s0.data(), m, n);
        kernels::omp::softmax_rows(x.data(), s1.data(), m, n);
        CHECK(s0 == s1);

        std::vector<double> d0(m * k), d1(m * k), e0(m * k), e1(m * k);
        kernels::serial::add(a.data(), a.data(), d0.data(), m * k);
        kernels::omp::add(a.data(), a.data(), d1.data(), m * k);
        CHECK(d0 == d1);
        kernels::serial::silu(a.data(), e0.data(), m * k);
        kernels::omp::silu(a.data(), e1.data(), m * k);
        CHECK(e0 == e1);
    }
}

TEST_CASE("matmul against a naive triple loop") {
    Rng rng(2);
    const std::size_t m = 5, k = 7, n = 3;
    std::vector<double> a(m * k), b(k * n), c(m * n), naive(m * n, 0.0);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    kernels::serial::matmul(a.data(), b.data(), c.data(), m, k, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t kk = 0; kk < k; ++kk)
                naive[i * n + j] += a[i * k + kk] * b[kk * n + j];
    for (std::size_t i = 0; i < m * n; ++i)
        CHECK(c[i] == doctest::Approx(naive[i]).epsilon(1e-12));
}
