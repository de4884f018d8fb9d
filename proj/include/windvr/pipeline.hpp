#pragma once

#include <optional>

#include "windvr/data.hpp"
#include "windvr/flow.hpp"
#include "windvr/model.hpp"

namespace windvr {

inline win::GridShape clip_grid(const data::Clip& c) {
    return {c.frames, c.height, c.width};
}

// Training-time layout: adaptive window size from the grid itself.
inline win::WindowLayout training_layout(const win::GridShape& g, const win::WindowCounts& counts) {
    return win::partition(g, win::training_window_size(g, counts));
}

// A prepared sample: LQ lifted to the HQ grid plus the window layout.
struct PreparedClip {
    win::GridShape grid;
    win::WindowLayout layout;
    Tensor lq_up; // [tokens, channels]
    Tensor hq;    // [tokens, channels]; empty tensor when no ground truth
};

inline PreparedClip prepare_clip(const data::Clip& lq, const data::Clip* hq,
                                 const win::WindowCounts& counts, std::size_t factor,
                                 std::optional<win::WindowSize> window_override = {}) {
    data::Clip up = data::upsample_nearest(lq, factor);
    PreparedClip p;
    p.grid = clip_grid(up);
    p.layout = window_override ? win::partition(p.grid, *window_override)
                               : training_layout(p.grid, counts);
    p.lq_up = data::clip_to_tensor(up);
    if (hq) p.hq = data::clip_to_tensor(*hq);
    return p;
}

// Wraps a backbone into the sampler's velocity interface for a fixed clip.
inline VelocityFn velocity_fn(const Backbone& net, const PreparedClip& p) {
    return [&net, &p](const Tensor& x, double tau, bool use_cond) {
        return net.forward(x, tau, p.lq_up, use_cond, p.grid, p.layout).velocity;
    };
}

// CFG-combined teacher velocity at one (x, tau).
inline Tensor cfg_velocity(const VelocityFn& fn, const Tensor& x, double tau, double cfg_scale) {
    Tensor vc = fn(x, tau, true);
    if (cfg_scale == 1.0) return vc;
    Tensor vu = fn(x, tau, false);
    return add(vu, smul(sub(vc, vu), cfg_scale));
}

// Full restoration of an LQ clip: Euler sampling from seeded noise.
inline data::Clip restore_clip(const Backbone& net, const data::Clip& lq, const SamplerConfig& cfg,
                               std::size_t factor = 4,
                               std::optional<win::WindowSize> window_override = {}) {
    NoGrad ng;
    PreparedClip p = prepare_clip(lq, nullptr, net.cfg.counts, factor, window_override);
    Rng rng(cfg.seed);
    Tensor eps = Tensor::randn({p.grid.volume(), net.cfg.channels}, rng);
    Tensor x0 = euler_sample(velocity_fn(net, p), eps, cfg);
    return data::tensor_to_clip(x0, p.grid.d_t, p.grid.d_h, p.grid.d_w);
}

} // namespace windvr
