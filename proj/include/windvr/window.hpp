#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace windvr::win {

struct GridShape {
    std::size_t d_t = 1, d_h = 1, d_w = 1;
    std::size_t volume() const { return d_t * d_h * d_w; }
};

struct WindowCounts {
    std::size_t n_t = 1, n_h = 3, n_w = 3;
};

struct WindowSize {
    std::size_t p_t = 1, p_h = 1, p_w = 1;
};

struct WindowBox {
    std::size_t t0 = 0, h0 = 0, w0 = 0;
    std::size_t et = 0, eh = 0, ew = 0;
    std::size_t volume() const { return et * eh * ew; }
};

struct WindowLayout {
    GridShape grid;
    std::vector<WindowBox> windows;
};

inline std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

// Training-time window size: p_t = ceil(min(d_t,30)/n_t), p_h = ceil(d_h/n_h),
// p_w = ceil(d_w/n_w). The min(.,30) cap bounds the temporal extent.
inline WindowSize training_window_size(const GridShape& g, const WindowCounts& c) {
    if (g.d_t == 0 || g.d_h == 0 || g.d_w == 0)
        throw std::runtime_error("training_window_size: zero grid extent");
    if (c.n_t == 0 || c.n_h == 0 || c.n_w == 0)
        throw std::runtime_error("training_window_size: zero window count");
    WindowSize s;
    s.p_t = ceil_div(std::min<std::size_t>(g.d_t, 30), c.n_t);
    s.p_h = ceil_div(g.d_h, c.n_h);
    s.p_w = ceil_div(g.d_w, c.n_w);
    return s;
}

// Spatial proxy resolution: preserves the training token area d_h*d_w and the
// test aspect ratio exactly (before any rounding).
inline std::pair<double, double> proxy_resolution(const GridShape& test,
                                                  std::pair<std::size_t, std::size_t> train_hw = {45, 80}) {
    if (test.d_h == 0 || test.d_w == 0)
        throw std::runtime_error("proxy_resolution: zero test extent");
    const double area = static_cast<double>(train_hw.first) * static_cast<double>(train_hw.second);
    const double ratio = static_cast<double>(test.d_h) / static_cast<double>(test.d_w);
    return {std::sqrt(area * ratio), std::sqrt(area / ratio)};
}

// Rounds to nearest integer with ties up, clamped to >= 1.
inline std::size_t round_extent(double x) {
    const double r = std::floor(x + 0.5);
    return r < 1.0 ? 1 : static_cast<std::size_t>(r);
}

// Test-time window size: apply the training formula on (d_t, proxy_h, proxy_w).
inline WindowSize test_window_size(const GridShape& test, const WindowCounts& c,
                                   std::pair<std::size_t, std::size_t> train_hw = {45, 80}) {
    auto [ph, pw] = proxy_resolution(test, train_hw);
    GridShape proxy{test.d_t, round_extent(ph), round_extent(pw)};
    return training_window_size(proxy, c);
}

// Tiles the grid with windows of nominal size `s`; per axis, windows start at
// multiples of the size and the last one is truncated to the boundary. A size
// larger than the axis yields one full-axis window.
inline WindowLayout partition(const GridShape& g, const WindowSize& s) {
    if (s.p_t == 0 || s.p_h == 0 || s.p_w == 0)
        throw std::runtime_error("partition: zero window size");
    WindowLayout layout;
    layout.grid = g;
    for (std::size_t t0 = 0; t0 < g.d_t; t0 += s.p_t)
        for (std::size_t h0 = 0; h0 < g.d_h; h0 += s.p_h)
            for (std::size_t w0 = 0; w0 < g.d_w; w0 += s.p_w) {
                WindowBox b;
                b.t0 = t0;
                b.h0 = h0;
                b.w0 = w0;
                b.et = std::min(s.p_t, g.d_t - t0);
                b.eh = std::min(s.p_h, g.d_h - h0);
                b.ew = std::min(s.p_w, g.d_w - w0);
                layout.windows.push_back(b);
            }
    return layout;
}

// Token <-> (window, slot) maps over a layout. `forward[token] = (win, slot)`
// with slots row-major (t,h,w) inside each window; `window_tokens[win]` lists
// the global token index of every slot, which is also the inverse map.
struct IndexMaps {
    std::vector<std::pair<std::size_t, std::size_t>> forward;
    std::vector<std::vector<std::size_t>> window_tokens;
};

inline IndexMaps index_maps(const WindowLayout& layout) {
    const GridShape& g = layout.grid;
    IndexMaps maps;
    maps.forward.assign(g.volume(), {SIZE_MAX, SIZE_MAX});
    maps.window_tokens.resize(layout.windows.size());
    for (std::size_t wi = 0; wi < layout.windows.size(); ++wi) {
        const WindowBox& b = layout.windows[wi];
        auto& toks = maps.window_tokens[wi];
        toks.reserve(b.volume());
        for (std::size_t t = b.t0; t < b.t0 + b.et; ++t)
            for (std::size_t h = b.h0; h < b.h0 + b.eh; ++h)
                for (std::size_t w = b.w0; w < b.w0 + b.ew; ++w) {
                    const std::size_t tok = (t * g.d_h + h) * g.d_w + w;
                    if (maps.forward[tok].first != SIZE_MAX)
                        throw std::runtime_error("index_maps: overlapping windows");
                    maps.forward[tok] = {wi, toks.size()};
                    toks.push_back(tok);
                }
    }
    for (auto& fw : maps.forward)
        if (fw.first == SIZE_MAX) throw std::runtime_error("index_maps: layout does not cover grid");
    return maps;
}

} // namespace windvr::win
