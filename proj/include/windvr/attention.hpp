#pragma once

#include <cmath>

#include "windvr/rope.hpp"
#include "windvr/tensor.hpp"
#include "windvr/window.hpp"

namespace windvr {

// Multi-head attention restricted to the given window layout. q,k,v are
// [tokens, heads, head_dim] in global token order; RoPE is applied to q and k
// with global grid coordinates (scores then depend only on relative offsets).
inline Tensor window_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                               const win::WindowLayout& layout, const RoPEConfig& rope) {
    if (q.shape != k.shape || q.shape != v.shape || q.shape.size() != 3)
        throw std::runtime_error("window_attention: q/k/v must share shape [tokens, heads, head_dim]");
    if (q.shape[0] != layout.grid.volume())
        throw std::runtime_error("window_attention: token count " + std::to_string(q.shape[0]) +
                                 " does not match grid volume " + std::to_string(layout.grid.volume()));
    const std::size_t heads = q.shape[1];
    const std::size_t hd = q.shape[2];
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    const auto maps = win::index_maps(layout);
    const auto pos = grid_positions(layout.grid);

    std::vector<Tensor> outs;
    outs.reserve(layout.windows.size());
    for (std::size_t wi = 0; wi < layout.windows.size(); ++wi) {
        const auto& toks = maps.window_tokens[wi];
        const std::size_t n = toks.size();
        std::vector<TokenPos> wpos(n);
        for (std::size_t i = 0; i < n; ++i) wpos[i] = pos[toks[i]];

        Tensor qw = rope_rotate(gather_rows(q, toks), wpos, rope);
        Tensor kw = rope_rotate(gather_rows(k, toks), wpos, rope);
        Tensor vw = gather_rows(v, toks);

        // [n,heads,hd] -> [heads,n,hd]
        qw = transpose(qw, 0, 1);
        kw = transpose(kw, 0, 1);
        vw = transpose(vw, 0, 1);

        Tensor scores = smul(matmul(qw, transpose(kw, 1, 2)), scale); // [heads,n,n]
        Tensor attn = softmax_lastdim(scores);
        Tensor ow = transpose(matmul(attn, vw), 0, 1); // [n,heads,hd]
        outs.push_back(std::move(ow));
    }

    Tensor packed = outs.size() == 1 ? std::move(outs[0]) : concat(outs, 0);

    // Scatter back: row offsets of each window inside `packed`.
    std::vector<std::size_t> offset(layout.windows.size(), 0);
    for (std::size_t wi = 1; wi < offset.size(); ++wi)
        offset[wi] = offset[wi - 1] + maps.window_tokens[wi - 1].size();
    std::vector<std::size_t> perm(q.shape[0]);
    for (std::size_t tok = 0; tok < perm.size(); ++tok) {
        const auto [wi, slot] = maps.forward[tok];
        perm[tok] = offset[wi] + slot;
    }
    return gather_rows(packed, perm);
}

} // namespace windvr
