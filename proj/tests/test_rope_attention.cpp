#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "windvr/attention.hpp"
#include "windvr/gradcheck.hpp"
#include "windvr/model.hpp"
#include "windvr/rng.hpp"

using namespace windvr;

namespace {

// Plain dense attention over one window, written independently of the
// windowed path: explicit loops, no tensor ops. Serves as the oracle.
std::vector<double> dense_attention(const std::vector<double>& q, const std::vector<double>& k,
                                    const std::vector<double>& v, std::size_t n,
                                    std::size_t heads, std::size_t hd) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
    std::vector<double> out(n * heads * hd, 0.0);
    for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> s(n);
            double mx = -1e300;
            for (std::size_t j = 0; j < n; ++j) {
                double dot = 0.0;
                for (std::size_t d = 0; d < hd; ++d)
                    dot += q[(i * heads + h) * hd + d] * k[(j * heads + h) * hd + d];
                s[j] = dot * scale;
                mx = std::max(mx, s[j]);
            }
            double z = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                s[j] = std::exp(s[j] - mx);
                z += s[j];
            }
            for (std::size_t j = 0; j < n; ++j) {
                const double w = s[j] / z;
                for (std::size_t d = 0; d < hd; ++d)
                    out[(i * heads + h) * hd + d] += w * v[(j * heads + h) * hd + d];
            }
        }
    }
    return out;
}

double score(const Tensor& q1, const Tensor& k1, const RoPEConfig& cfg,
             const TokenPos& pa, const TokenPos& pb) {
    Tensor qr = rope_rotate(q1, {pa}, cfg);
    Tensor kr = rope_rotate(k1, {pb}, cfg);
    double dot = 0.0;
    for (std::size_t d = 0; d < cfg.head_dim; ++d) dot += qr.data[d] * kr.data[d];
    return dot;
}

} // namespace

TEST_CASE("rope is an isometry") {
    Rng rng(31);
    RoPEConfig cfg = RoPEConfig::for_head_dim(16);
    win::GridShape g{2, 3, 4};
    auto pos = grid_positions(g);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor q = Tensor::randn({g.volume(), 2, 16}, rng);
        Tensor r = rope_rotate(q, pos, cfg);
        for (std::size_t tk = 0; tk < g.volume(); ++tk)
            for (std::size_t h = 0; h < 2; ++h) {
                double n0 = 0, n1 = 0;
                for (std::size_t d = 0; d < 16; ++d) {
                    n0 += q.data[(tk * 2 + h) * 16 + d] * q.data[(tk * 2 + h) * 16 + d];
                    n1 += r.data[(tk * 2 + h) * 16 + d] * r.data[(tk * 2 + h) * 16 + d];
                }
                CHECK(std::fabs(n0 - n1) / std::max(n0, 1e-30) < 1e-12);
            }
    }
}

TEST_CASE("rope scores depend only on relative offsets") {
    Rng rng(37);
    RoPEConfig cfg = RoPEConfig::for_head_dim(16);
    for (int trial = 0; trial < 200; ++trial) {
        Tensor q = Tensor::randn({1, 1, 16}, rng);
        Tensor k = Tensor::randn({1, 1, 16}, rng);
        TokenPos a{rng.uniform_int(0, 10), rng.uniform_int(0, 20), rng.uniform_int(0, 20)};
        TokenPos b{rng.uniform_int(0, 10), rng.uniform_int(0, 20), rng.uniform_int(0, 20)};
        TokenPos shift{rng.uniform_int(0, 7), rng.uniform_int(0, 13), rng.uniform_int(0, 13)};
        const double s0 = score(q, k, cfg, a, b);
        TokenPos a2{a[0] + shift[0], a[1] + shift[1], a[2] + shift[2]};
        TokenPos b2{b[0] + shift[0], b[1] + shift[1], b[2] + shift[2]};
        const double s1 = score(q, k, cfg, a2, b2);
        CHECK(std::fabs(s0 - s1) / std::max(std::fabs(s0), 1e-12) < 1e-9);
    }
}

TEST_CASE("rope band split") {
    RoPEConfig c16 = RoPEConfig::for_head_dim(16);
    CHECK(c16.dim_t == 4);
    CHECK(c16.dim_h == 6);
    CHECK(c16.dim_w == 6);
    RoPEConfig c4 = RoPEConfig::for_head_dim(4);
    CHECK(c4.dim_t == 0);
    CHECK(c4.dim_h == 2);
    CHECK(c4.dim_w == 2);
    CHECK_THROWS_AS(RoPEConfig::for_head_dim(3), std::runtime_error);
}

TEST_CASE("rope gradient") {
    Rng rng(41);
    RoPEConfig cfg = RoPEConfig::for_head_dim(8);
    win::GridShape g{1, 2, 2};
    auto pos = grid_positions(g);
    Tensor x0 = Tensor::randn({4, 1, 8}, rng);
    Tensor w = Tensor::randn({4, 1, 8}, rng);
    auto rep = grad_check(
        [&](const Tensor& x) { return sum_all(mul(rope_rotate(x, pos, cfg), w)); }, x0);
    CHECK(rep.pass);
}

TEST_CASE("windowed attention matches the dense per-window oracle bitwise") {
    Rng rng(43);
    win::GridShape g{1, 4, 4};
    const std::size_t heads = 2, hd = 8;
    RoPEConfig cfg = RoPEConfig::for_head_dim(hd);
    win::WindowLayout layout = win::partition(g, {1, 2, 2});
    Tensor q = Tensor::randn({16, heads, hd}, rng);
    Tensor k = Tensor::randn({16, heads, hd}, rng);
    Tensor v = Tensor::randn({16, heads, hd}, rng);
    Tensor out = window_attention(q, k, v, layout, cfg);

    // oracle: rotate q/k with the same tables, then dense attention per window
    auto maps = win::index_maps(layout);
    auto pos = grid_positions(g);
    for (std::size_t wi = 0; wi < layout.windows.size(); ++wi) {
        const auto& toks = maps.window_tokens[wi];
        const std::size_t n = toks.size();
        std::vector<TokenPos> wpos(n);
        std::vector<double> qg(n * heads * hd), kg(n * heads * hd), vg(n * heads * hd);
        for (std::size_t i = 0; i < n; ++i) {
            wpos[i] = pos[toks[i]];
            for (std::size_t j = 0; j < heads * hd; ++j) {
                qg[i * heads * hd + j] = q.data[toks[i] * heads * hd + j];
                kg[i * heads * hd + j] = k.data[toks[i] * heads * hd + j];
                vg[i * heads * hd + j] = v.data[toks[i] * heads * hd + j];
            }
        }
        Tensor qt = rope_rotate(Tensor::leaf({n, heads, hd}, qg), wpos, cfg);
        Tensor kt = rope_rotate(Tensor::leaf({n, heads, hd}, kg), wpos, cfg);
        auto oracle = dense_attention(qt.data, kt.data, vg, n, heads, hd);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < heads * hd; ++j) {
                const double got = out.data[toks[i] * heads * hd + j];
                const double want = oracle[i * heads * hd + j];
                CHECK(std::fabs(got - want) < 1e-12);
            }
    }
}

TEST_CASE("single-window layout equals full attention") {
    Rng rng(47);
    win::GridShape g{1, 4, 4};
    RoPEConfig cfg = RoPEConfig::for_head_dim(8);
    win::WindowLayout one = win::partition(g, {1, 4, 4});
    win::WindowLayout big = win::partition(g, {30, 30, 30});
    Tensor q = Tensor::randn({16, 2, 8}, rng);
    Tensor k = Tensor::randn({16, 2, 8}, rng);
    Tensor v = Tensor::randn({16, 2, 8}, rng);
    Tensor a = window_attention(q, k, v, one, cfg);
    Tensor b = window_attention(q, k, v, big, cfg);
    CHECK(a.data == b.data); // bitwise
}

TEST_CASE("attention is local to its window") {
    Rng rng(53);
    win::GridShape g{1, 4, 4};
    RoPEConfig cfg = RoPEConfig::for_head_dim(8);
    win::WindowLayout layout = win::partition(g, {1, 2, 2});
    Tensor q = Tensor::randn({16, 1, 8}, rng);
    Tensor k = Tensor::randn({16, 1, 8}, rng);
    Tensor v = Tensor::randn({16, 1, 8}, rng);
    Tensor base = window_attention(q, k, v, layout, cfg);
    // perturb a token in the last window; first-window outputs must not move
    Tensor v2 = v.detached();
    v2.data[15 * 8 + 3] += 10.0;
    Tensor moved = window_attention(q, k, v2, layout, cfg);
    auto maps = win::index_maps(layout);
    for (std::size_t tok : maps.window_tokens[0])
        for (std::size_t d = 0; d < 8; ++d)
            CHECK(base.data[tok * 8 + d] == moved.data[tok * 8 + d]);
}

TEST_CASE("attention determinism") {
    Rng rng(59);
    win::GridShape g{2, 4, 4};
    RoPEConfig cfg = RoPEConfig::for_head_dim(16);
    win::WindowLayout layout = win::partition(g, {1, 2, 2});
    Tensor q = Tensor::randn({32, 2, 16}, rng);
    Tensor k = Tensor::randn({32, 2, 16}, rng);
    Tensor v = Tensor::randn({32, 2, 16}, rng);
    Tensor a = window_attention(q, k, v, layout, cfg);
    Tensor b = window_attention(q, k, v, layout, cfg);
    CHECK(a.data == b.data);
}

TEST_CASE("backbone is the identity map at init") {
    ModelConfig mc;
    mc.model_dim = 16;
    mc.num_heads = 2;
    mc.num_blocks = 2;
    Backbone net = Backbone::init(mc, 7);
    Rng rng(61);
    win::GridShape g{1, 4, 4};
    win::WindowLayout layout = win::partition(g, {1, 2, 2});
    Tensor x = Tensor::randn({16, 3}, rng);
    Tensor lq = Tensor::randn({16, 3}, rng);
    Tensor v = net.forward(x, 0.5, lq, true, g, layout).velocity;
    // zero-init output head -> exactly zero velocity before any training
    for (double val : v.data) CHECK(val == 0.0);
}

TEST_CASE("tap block indices") {
    ModelConfig mc;
    mc.num_blocks = 6;
    Backbone net = Backbone::init(mc, 1);
    auto taps = net.tap_blocks();
    REQUIRE(taps.size() == 3);
    CHECK(taps[0] == 3); // ceil(6*16/36)
    CHECK(taps[1] == 5); // ceil(6*26/36)
    CHECK(taps[2] == 6);
}

TEST_CASE("full small backbone passes grad_check") {
    ModelConfig mc;
    mc.model_dim = 8;
    mc.num_heads = 2;
    mc.num_blocks = 2;
    mc.mlp_ratio = 2;
    Backbone net = Backbone::init(mc, 3);
    // nudge params off the zero-init identity so gradients are informative
    Rng nz(67);
    for (Tensor* p : net.param_list())
        for (auto& v : p->data) v += 0.05 * nz.normal();

    Rng rng(71);
    win::GridShape g{1, 4, 4};
    win::WindowLayout layout = win::partition(g, {1, 2, 2});
    Tensor lq = Tensor::randn({16, 3}, rng);
    Tensor target = Tensor::randn({16, 3}, rng);
    Tensor x0 = Tensor::randn({16, 3}, rng);
    auto rep = grad_check(
        [&](const Tensor& x) {
            Tensor v = net.forward(x, 0.4, lq, true, g, layout).velocity;
            return mean_all(square(sub(v, target)));
        },
        x0);
    CHECK(rep.pass);

    // and through one parameter tensor
    Tensor* w = net.param_list()[4];
    Tensor w0 = w->detached();
    auto repw = grad_check(
        [&](const Tensor& cand) {
            w->data = cand.data;
            w->node = cand.node;
            Tensor v = net.forward(x0, 0.4, lq, true, g, layout).velocity;
            return mean_all(square(sub(v, target)));
        },
        w0);
    CHECK(repw.pass);
}
