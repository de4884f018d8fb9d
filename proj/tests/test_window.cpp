#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "windvr/rng.hpp"
#include "windvr/window.hpp"

using namespace windvr;
using namespace windvr::win;

TEST_CASE("training window size worked values") {
    CHECK(training_window_size({1, 45, 80}, {1, 3, 3}).p_h == 15);
    CHECK(training_window_size({1, 45, 80}, {1, 3, 3}).p_w == 27);
    // temporal cap at 30
    CHECK(training_window_size({100, 45, 80}, {1, 3, 3}).p_t == 30);
    CHECK(training_window_size({100, 45, 80}, {2, 3, 3}).p_t == 15);
    CHECK(training_window_size({7, 45, 80}, {2, 3, 3}).p_t == 4); // ceil(7/2)
}

TEST_CASE("proxy resolution worked values") {
    auto p1 = proxy_resolution({1, 135, 240});
    CHECK(p1.first == doctest::Approx(45.0).epsilon(1e-12));
    CHECK(p1.second == doctest::Approx(80.0).epsilon(1e-12));
    auto p2 = proxy_resolution({1, 100, 100});
    CHECK(p2.first == doctest::Approx(60.0).epsilon(1e-12));
    CHECK(p2.second == doctest::Approx(60.0).epsilon(1e-12));
    auto p3 = proxy_resolution({1, 90, 160});
    CHECK(p3.first == doctest::Approx(45.0).epsilon(1e-12));
    CHECK(p3.second == doctest::Approx(80.0).epsilon(1e-12));
    // area preserved, aspect preserved
    auto p4 = proxy_resolution({1, 123, 457});
    CHECK(p4.first * p4.second == doctest::Approx(45.0 * 80.0).epsilon(1e-10));
    CHECK(p4.first / p4.second == doctest::Approx(123.0 / 457.0).epsilon(1e-10));
}

TEST_CASE("test-time window size routes through the proxy") {
    WindowSize s = test_window_size({1, 135, 240}, {1, 3, 3});
    CHECK(s.p_h == 15);
    CHECK(s.p_w == 27);
    WindowSize sq = test_window_size({1, 100, 100}, {1, 3, 3});
    CHECK(sq.p_h == 20); // ceil(60/3)
    CHECK(sq.p_w == 20);
}

TEST_CASE("round_extent ties up and clamps") {
    CHECK(round_extent(2.5) == 3);
    CHECK(round_extent(2.49) == 2);
    CHECK(round_extent(0.2) == 1);
    CHECK(round_extent(0.0) == 1);
}

TEST_CASE("partition worked example: 45x80 into 3x3 spatial windows") {
    WindowLayout layout = partition({1, 45, 80}, {1, 15, 27});
    REQUIRE(layout.windows.size() == 9);
    std::vector<std::size_t> h0s, w0s;
    for (const auto& b : layout.windows) {
        h0s.push_back(b.h0);
        w0s.push_back(b.w0);
        CHECK(b.eh == 15);
        CHECK(b.ew == (b.w0 == 54 ? 26u : 27u)); // last column truncated
    }
    CHECK(h0s[0] == 0);
    CHECK(w0s[2] == 54);
}

TEST_CASE("index maps round trip") {
    WindowLayout layout = partition({2, 5, 7}, {1, 2, 3});
    IndexMaps maps = index_maps(layout);
    for (std::size_t tok = 0; tok < layout.grid.volume(); ++tok) {
        auto [wi, slot] = maps.forward[tok];
        CHECK(maps.window_tokens[wi][slot] == tok);
    }
}

TEST_CASE("partition soundness over random grids") {
    Rng rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        GridShape g{rng.uniform_int(1, 6), rng.uniform_int(1, 64), rng.uniform_int(1, 64)};
        WindowCounts c{rng.uniform_int(1, 5), rng.uniform_int(1, 5), rng.uniform_int(1, 5)};
        WindowSize s = training_window_size(g, c);
        WindowLayout layout = partition(g, s);
        // exact cover with no overlap is what index_maps validates internally
        IndexMaps maps = index_maps(layout);
        std::size_t covered = 0;
        for (const auto& toks : maps.window_tokens) covered += toks.size();
        CHECK(covered == g.volume());
        // only last-per-axis windows may be truncated
        for (const auto& b : layout.windows) {
            if (b.et != s.p_t) CHECK(b.t0 + b.et == g.d_t);
            if (b.eh != s.p_h) CHECK(b.h0 + b.eh == g.d_h);
            if (b.ew != s.p_w) CHECK(b.w0 + b.ew == g.d_w);
        }
    }
}

TEST_CASE("degenerate and error cases") {
    CHECK_THROWS_AS(training_window_size({0, 1, 1}, {1, 1, 1}), std::runtime_error);
    CHECK_THROWS_AS(training_window_size({1, 1, 1}, {0, 1, 1}), std::runtime_error);
    CHECK_THROWS_AS(partition({1, 4, 4}, {0, 1, 1}), std::runtime_error);
    // window larger than the axis: single full-axis window
    WindowLayout layout = partition({1, 4, 4}, {8, 8, 8});
    REQUIRE(layout.windows.size() == 1);
    CHECK(layout.windows[0].volume() == 16);
}
