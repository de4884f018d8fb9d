#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "windvr/tensor.hpp"
#include "windvr/window.hpp"

namespace windvr {

// 3D rotary embedding: the head dimension is split into three even bands, one
// per grid axis; pairs inside a band rotate by pos * theta_k with frequencies
// decreasing geometrically.
struct RoPEConfig {
    std::size_t head_dim = 16;
    std::size_t dim_t = 4, dim_h = 6, dim_w = 6;
    double base_freq = 10000.0;

    void validate() const {
        if (head_dim == 0 || head_dim % 2 != 0)
            throw std::runtime_error("RoPEConfig: head_dim must be even and positive");
        if (dim_t % 2 != 0 || dim_h % 2 != 0 || dim_w % 2 != 0)
            throw std::runtime_error("RoPEConfig: axis band widths must be even");
        if (dim_t + dim_h + dim_w != head_dim)
            throw std::runtime_error("RoPEConfig: axis bands must sum to head_dim");
    }

    // Even split favouring the spatial axes, e.g. head_dim 16 -> (4,6,6).
    static RoPEConfig for_head_dim(std::size_t hd, double base = 10000.0) {
        RoPEConfig c;
        c.head_dim = hd;
        c.base_freq = base;
        const std::size_t pairs = hd / 2;
        const std::size_t pt = pairs / 4;
        const std::size_t ph = (pairs - pt) / 2;
        c.dim_t = 2 * pt;
        c.dim_h = 2 * ph;
        c.dim_w = hd - c.dim_t - c.dim_h;
        c.validate();
        return c;
    }
};

using TokenPos = std::array<std::size_t, 3>; // (t,h,w) global grid coordinates

inline std::vector<TokenPos> grid_positions(const win::GridShape& g) {
    std::vector<TokenPos> pos;
    pos.reserve(g.volume());
    for (std::size_t t = 0; t < g.d_t; ++t)
        for (std::size_t h = 0; h < g.d_h; ++h)
            for (std::size_t w = 0; w < g.d_w; ++w) pos.push_back({t, h, w});
    return pos;
}

// Applies the rotation to qk of shape [tokens, heads, head_dim]. Linear op;
// backward rotates the upstream gradient by the negative angle.
inline Tensor rope_rotate(const Tensor& qk, const std::vector<TokenPos>& pos, const RoPEConfig& cfg) {
    cfg.validate();
    if (qk.shape.size() != 3 || qk.shape[2] != cfg.head_dim || qk.shape[0] != pos.size())
        throw std::runtime_error("rope_rotate: expected [tokens, heads, head_dim] matching positions, got " +
                                 shape_str(qk.shape));
    const std::size_t tokens = qk.shape[0];
    const std::size_t heads = qk.shape[1];
    const std::size_t hd = cfg.head_dim;

    // Per-token cos/sin table, one entry per rotation pair.
    const std::size_t pairs = hd / 2;
    auto cs = std::make_shared<std::vector<double>>(tokens * pairs * 2);
    {
        const std::size_t band_dims[3] = {cfg.dim_t, cfg.dim_h, cfg.dim_w};
        for (std::size_t tk = 0; tk < tokens; ++tk) {
            std::size_t pi = 0;
            for (std::size_t axis = 0; axis < 3; ++axis) {
                const std::size_t bp = band_dims[axis] / 2;
                const double coord = static_cast<double>(pos[tk][axis]);
                for (std::size_t j = 0; j < bp; ++j, ++pi) {
                    const double theta =
                        std::pow(cfg.base_freq, -2.0 * static_cast<double>(j) / static_cast<double>(band_dims[axis]));
                    const double a = coord * theta;
                    (*cs)[(tk * pairs + pi) * 2] = std::cos(a);
                    (*cs)[(tk * pairs + pi) * 2 + 1] = std::sin(a);
                }
            }
        }
    }

    auto rotate = [tokens, heads, pairs, cs](const std::vector<double>& in, std::vector<double>& out,
                                             double sin_sign) {
        for (std::size_t tk = 0; tk < tokens; ++tk)
            for (std::size_t h = 0; h < heads; ++h) {
                const double* xi = in.data() + (tk * heads + h) * pairs * 2;
                double* oi = out.data() + (tk * heads + h) * pairs * 2;
                const double* ct = cs->data() + tk * pairs * 2;
                for (std::size_t p = 0; p < pairs; ++p) {
                    const double c = ct[p * 2];
                    const double s = sin_sign * ct[p * 2 + 1];
                    const double x0 = xi[p * 2], x1 = xi[p * 2 + 1];
                    oi[p * 2] = x0 * c - x1 * s;
                    oi[p * 2 + 1] = x0 * s + x1 * c;
                }
            }
    };

    std::vector<double> d(qk.size());
    rotate(qk.data, d, 1.0);
    Tensor out(qk.shape, std::move(d));
    if (grad_enabled() && qk.node) {
        auto xn = qk.node;
        auto n = std::make_shared<Node>();
        n->op = "rope";
        n->shape = out.shape;
        n->size = out.size();
        n->parents = {xn};
        n->backprop = [xn, rotate](const std::vector<double>& up) {
            std::vector<double> g(up.size());
            rotate(up, g, -1.0);
            xn->accumulate(g.data(), g.size());
        };
        out.node = std::move(n);
    }
    return out;
}

} // namespace windvr
