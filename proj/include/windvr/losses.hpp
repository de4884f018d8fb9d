#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "windvr/rng.hpp"
#include "windvr/tensor.hpp"

namespace windvr::loss {

struct LossWeights {
    // generator
    double l1 = 1.0;
    double fm = 1.0;
    double gan = 1.0;
    // discriminator
    double gan_d = 1.0;
    double r1 = 1000.0;
    double r2 = 1000.0;
    // perturbation scale for the approximated R1/R2, as a fraction of the
    // batch standard deviation of the input.
    double sigma_rel = 0.01;
};

inline Tensor l1_loss(const Tensor& pred, const Tensor& target) {
    if (pred.shape != target.shape)
        throw std::runtime_error("l1_loss: shape mismatch " + shape_str(pred.shape) + " vs " +
                                 shape_str(target.shape));
    return mean_all(abs_t(sub(pred, target)));
}

inline Tensor mse_loss(const Tensor& pred, const Tensor& target) {
    if (pred.shape != target.shape)
        throw std::runtime_error("mse_loss: shape mismatch");
    return mean_all(square(sub(pred, target)));
}

// Relativistic pairing losses over batch-aligned logits (shape {B} each).
// d = mean softplus(-(real - fake)), g = mean softplus(-(fake - real)).
inline Tensor rpgan_d_loss(const Tensor& real, const Tensor& fake) {
    if (real.shape != fake.shape) throw std::runtime_error("rpgan_d_loss: logit batch mismatch");
    return mean_all(softplus(neg(sub(real, fake))));
}

inline Tensor rpgan_g_loss(const Tensor& real, const Tensor& fake) {
    if (real.shape != fake.shape) throw std::runtime_error("rpgan_g_loss: logit batch mismatch");
    return mean_all(softplus(neg(sub(fake, real))));
}

// Non-saturating baseline: d = mean[softplus(-real) + softplus(fake)],
// g = mean softplus(-fake).
inline Tensor nonsat_d_loss(const Tensor& real, const Tensor& fake) {
    if (real.shape != fake.shape) throw std::runtime_error("nonsat_d_loss: logit batch mismatch");
    return add(mean_all(softplus(neg(real))), mean_all(softplus(fake)));
}

inline Tensor nonsat_g_loss(const Tensor& fake) {
    return mean_all(softplus(neg(fake)));
}

// Approximated gradient-norm penalty: ||D(x) - D(x + sigma n)||^2 averaged over
// the batch, n standard normal. aR1 when x is real data, aR2 when fake.
// The caller evaluates D; this helper handles one sample given both logits.
inline Tensor approx_r_term(const Tensor& logit_clean, const Tensor& logit_perturbed) {
    return sum_all(square(sub(logit_clean, logit_perturbed)));
}

// Draws the perturbation x + sigma n with a seeded generator; no gradient
// flows through the noise.
inline Tensor perturb(const Tensor& x, double sigma, Rng& rng) {
    if (sigma <= 0.0) throw std::runtime_error("perturb: sigma must be > 0");
    std::vector<double> d(x.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = x.data[i] + sigma * rng.normal();
    Tensor out(x.shape, std::move(d));
    if (grad_enabled() && x.node) {
        // shift by a constant: gradient passes through unchanged
        auto xn = x.node;
        auto n = std::make_shared<Node>();
        n->op = "perturb";
        n->shape = out.shape;
        n->size = out.size();
        n->parents = {xn};
        n->backprop = [xn](const std::vector<double>& up) { xn->accumulate(up.data(), up.size()); };
        out.node = std::move(n);
    }
    return out;
}

inline double batch_std(const Tensor& x) {
    double mu = 0.0;
    for (double v : x.data) mu += v;
    mu /= static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x.data) var += (v - mu) * (v - mu);
    return std::sqrt(var / static_cast<double>(x.size()));
}

// Feature matching: (1/K) sum_k mean|fake_k - real_k|. Real taps must be
// detached by the caller (gradient flows to the fake path only).
inline Tensor feature_matching(const std::vector<Tensor>& taps_fake,
                               const std::vector<Tensor>& taps_real) {
    if (taps_fake.size() != taps_real.size() || taps_fake.empty())
        throw std::runtime_error("feature_matching: tap list mismatch");
    Tensor acc = Tensor::zeros({1});
    for (std::size_t k = 0; k < taps_fake.size(); ++k) {
        if (taps_fake[k].shape != taps_real[k].shape)
            throw std::runtime_error("feature_matching: tap shape mismatch at index " + std::to_string(k));
        acc = add(acc, mean_all(abs_t(sub(taps_fake[k], taps_real[k].detached()))));
    }
    return smul(acc, 1.0 / static_cast<double>(taps_fake.size()));
}

} // namespace windvr::loss
