#pragma once

#include <cstdint>
#include <cmath>

namespace windvr {

// SplitMix64-based generator. Self-contained so that streams are
// bit-reproducible across platforms and standard library versions
// (std::normal_distribution is implementation-defined).
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    // Derive an independent stream, e.g. per batch item or per module.
    Rng fork(uint64_t stream) const {
        return Rng(mix(state_ ^ (0x9e3779b97f4a7c15ULL * (stream + 1))));
    }

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    // Uniform in [0,1) with 53 bits of precision.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Inclusive integer range.
    uint64_t uniform_int(uint64_t lo, uint64_t hi) {
        return lo + next_u64() % (hi - lo + 1);
    }

    // Box-Muller, one value per call (the pair's sibling is cached).
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

private:
    static uint64_t mix(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    uint64_t state_;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

} // namespace windvr
