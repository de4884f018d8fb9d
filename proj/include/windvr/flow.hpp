#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>

#include "windvr/tensor.hpp"

namespace windvr {

// Linear schedule: integer timestep t in {0..999} maps to tau = (t+1)/1000.
struct NoiseSchedule {
    std::size_t num_steps = 1000;
    double tau(std::size_t t) const {
        if (t >= num_steps) throw std::runtime_error("NoiseSchedule: timestep out of range");
        return static_cast<double>(t + 1) / static_cast<double>(num_steps);
    }
};

struct SamplerConfig {
    std::size_t steps = 1;
    double cfg_scale = 1.0;
    uint64_t seed = 0;
};

// Rectified-flow interpolant: x_tau = (1-tau) x0 + tau eps; noise at tau=1.
inline Tensor interpolate(const Tensor& x0, const Tensor& eps, double tau) {
    if (x0.shape != eps.shape)
        throw std::runtime_error("interpolate: shape mismatch " + shape_str(x0.shape) + " vs " +
                                 shape_str(eps.shape));
    return add(smul(x0, 1.0 - tau), smul(eps, tau));
}

// d/dtau of the interpolant.
inline Tensor velocity_target(const Tensor& x0, const Tensor& eps) {
    return sub(eps, x0);
}

// Sample prediction from a velocity estimate: x0_hat = x_tau - tau * v.
// With the true velocity this inverts the interpolant exactly; tau=0 is the
// identity.
inline Tensor to_sample(const Tensor& x_tau, const Tensor& v, double tau) {
    if (x_tau.shape != v.shape)
        throw std::runtime_error("to_sample: shape mismatch " + shape_str(x_tau.shape) + " vs " +
                                 shape_str(v.shape));
    return sub(x_tau, smul(v, tau));
}

// Velocity model evaluated at (x, tau); use_cond selects the conditional vs the
// condition-dropout branch (the LQ clip itself is always provided inside).
using VelocityFn = std::function<Tensor(const Tensor& x, double tau, bool use_cond)>;

// Euler sampler from tau=1 down to 0 over uniform intervals, with
// classifier-free guidance v = v_u + s (v_c - v_u). At s == 1 the
// unconditional branch is never evaluated (it cannot affect the result).
inline Tensor euler_sample(const VelocityFn& model, const Tensor& eps, const SamplerConfig& cfg) {
    if (cfg.steps < 1) throw std::runtime_error("euler_sample: steps must be >= 1");
    Tensor x = eps.detached();
    const double dt = 1.0 / static_cast<double>(cfg.steps);
    for (std::size_t i = 0; i < cfg.steps; ++i) {
        const double tau = 1.0 - static_cast<double>(i) * dt;
        Tensor vc = model(x, tau, true);
        if (vc.shape != x.shape)
            throw std::runtime_error("euler_sample: model output shape " + shape_str(vc.shape) +
                                     " does not match state " + shape_str(x.shape));
        Tensor v;
        if (cfg.cfg_scale == 1.0) {
            v = std::move(vc);
        } else {
            Tensor vu = model(x, tau, false);
            v = add(vu, smul(sub(vc, vu), cfg.cfg_scale));
        }
        x = sub(x, smul(v, dt));
    }
    return x;
}

} // namespace windvr
