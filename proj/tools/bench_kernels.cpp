// Compares the serial reference kernels against the OpenMP versions: checks
// bitwise agreement and reports throughput for typical training shapes.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "windvr/kernels.hpp"
#include "windvr/rng.hpp"

using namespace windvr;

namespace {

double now_s() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

void bench_matmul(std::size_t m, std::size_t k, std::size_t n, std::size_t reps) {
    Rng rng(42);
    std::vector<double> a(m * k), b(k * n), c_serial(m * n), c_omp(m * n);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();

    double t0 = now_s();
    for (std::size_t r = 0; r < reps; ++r)
        kernels::serial::matmul(a.data(), b.data(), c_serial.data(), m, k, n);
    double serial_s = (now_s() - t0) / static_cast<double>(reps);

    t0 = now_s();
    for (std::size_t r = 0; r < reps; ++r)
        kernels::omp::matmul(a.data(), b.data(), c_omp.data(), m, k, n);
    double omp_s = (now_s() - t0) / static_cast<double>(reps);

    const bool bitwise =
        std::memcmp(c_serial.data(), c_omp.data(), m * n * sizeof(double)) == 0;
    const double flops = 2.0 * static_cast<double>(m) * static_cast<double>(k) *
                         static_cast<double>(n);
    std::printf("matmul %4zux%4zux%4zu  serial %8.3f ms (%6.2f GF/s)  omp %8.3f ms (%6.2f GF/s)  "
                "speedup %.2fx  bitwise %s\n",
                m, k, n, serial_s * 1e3, flops / serial_s * 1e-9, omp_s * 1e3,
                flops / omp_s * 1e-9, serial_s / omp_s, bitwise ? "ok" : "MISMATCH");
}

void bench_softmax(std::size_t rows, std::size_t cols, std::size_t reps) {
    Rng rng(7);
    std::vector<double> x(rows * cols), y_serial(rows * cols), y_omp(rows * cols);
    for (auto& v : x) v = rng.normal();

    double t0 = now_s();
    for (std::size_t r = 0; r < reps; ++r)
        kernels::serial::softmax_rows(x.data(), y_serial.data(), rows, cols);
    double serial_s = (now_s() - t0) / static_cast<double>(reps);

    t0 = now_s();
    for (std::size_t r = 0; r < reps; ++r)
        kernels::omp::softmax_rows(x.data(), y_omp.data(), rows, cols);
    double omp_s = (now_s() - t0) / static_cast<double>(reps);

    const bool bitwise =
        std::memcmp(y_serial.data(), y_omp.data(), rows * cols * sizeof(double)) == 0;
    std::printf("softmax %5zux%4zu       serial %8.3f ms             omp %8.3f ms             "
                "speedup %.2fx  bitwise %s\n",
                rows, cols, serial_s * 1e3, omp_s * 1e3, serial_s / omp_s,
                bitwise ? "ok" : "MISMATCH");
}

} // namespace

int main() {
    bench_matmul(64, 64, 64, 200);
    bench_matmul(256, 64, 256, 50);
    bench_matmul(256, 256, 256, 20);
    bench_matmul(1024, 64, 64, 50);
    bench_softmax(1024, 256, 100);
    bench_softmax(4096, 64, 100);
    return 0;
}
