#pragma once

#include <cstdint>
#include <vector>

#include "windvr/data.hpp"
#include "windvr/distill.hpp"
#include "windvr/losses.hpp"
#include "windvr/model.hpp"
#include "windvr/optim.hpp"

namespace windvr::apt {

using distill::MetricsSink;

enum class GanKind { rpgan, nonsat };

struct TrainConfig {
    loss::LossWeights weights;
    GanKind gan = GanKind::rpgan;
    std::size_t iters = 2000;
    double lr_g = 5e-5;
    double lr_d = 5e-5;
    uint64_t seed = 1;
    // Every eval_cadence iterations restore a held-out clip (one-step) and
    // log PSNR/SSIM against its ground truth. 0 disables evaluation.
    std::size_t eval_cadence = 0;
    data::StreamConfig stream;
};

// Per-step loss components. total is the weighted sum actually stepped on.
struct GenStep {
    double l1 = 0.0, fm = 0.0, gan = 0.0, total = 0.0;
    bool stepped = false;
};
struct DiscStep {
    double gan = 0.0, r1 = 0.0, r2 = 0.0, total = 0.0;
    bool stepped = false;
};

struct TrainResult {
    std::vector<double> g_trace, d_trace;
    std::vector<double> eval_psnr, eval_ssim;
};

// One generator update with the discriminator frozen. The generator maps
// noise to a clean estimate in a single velocity evaluation at tau = 1.
GenStep generator_step(Backbone& gen, const Discriminator& disc, windvr::AdamW& opt,
                       const data::PairStream::Pair& pair, const loss::LossWeights& w,
                       GanKind gan, Rng& rng);

// One discriminator update with the generator frozen. R1/R2 are approximated
// by finite perturbations of the real/fake inputs.
DiscStep discriminator_step(const Backbone& gen, Discriminator& disc, windvr::AdamW& opt,
                            const data::PairStream::Pair& pair, const loss::LossWeights& w,
                            GanKind gan, Rng& rng);

// Alternating 1:1 adversarial post-training. Throws on non-finite losses and
// verifies after every step that the frozen network's parameters are
// bit-identical to before the step.
TrainResult train_apt(Backbone& gen, Discriminator& disc, const TrainConfig& cfg,
                      const MetricsSink& sink = {});

} // namespace windvr::apt
