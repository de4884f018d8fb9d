#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "windvr/gradcheck.hpp"
#include "windvr/rng.hpp"
#include "windvr/tensor.hpp"

using namespace windvr;

TEST_CASE("matmul identity") {
    Tensor a = Tensor::leaf({2, 2}, {1, 2, 3, 4});
    Tensor id = Tensor::leaf({2, 2}, {1, 0, 0, 1});
    Tensor c = matmul(a, id);
    CHECK(c.data == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("softmax symmetry and row sums") {
    Tensor x = Tensor::leaf({3}, {0, 0, 0});
    Tensor y = softmax_lastdim(x);
    for (double v : y.data) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    Rng rng(3);
    Tensor z = Tensor::randn({16, 9}, rng, 3.0);
    Tensor s = softmax_lastdim(z);
    for (std::size_t r = 0; r < 16; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < 9; ++c) {
            double v = s.data[r * 9 + c];
            CHECK(v > 0.0);
            CHECK(v < 1.0);
            sum += v;
        }
        CHECK(std::fabs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("softplus scalar value") {
    Tensor y = softplus(Tensor::leaf({1}, {-3.0}));
    // high-precision value of ln(1+e^-3)
    CHECK(y.item() == doctest::Approx(0.048587351573742).epsilon(1e-12));
}

TEST_CASE("backward basic examples") {
    Tensor x = Tensor::leaf({3}, {1, 2, 3});
    GradMap g = backward(sum_all(square(x)));
    const Tensor& gx = g.at(x.node.get());
    CHECK(gx.data == std::vector<double>{2, 4, 6});

    Tensor x2 = Tensor::leaf({4}, {0.3, -1.2, 2.0, 0.1});
    GradMap g2 = backward(sum_all(softmax_lastdim(x2)));
    for (double v : g2.at(x2.node.get()).data) CHECK(std::fabs(v) < 1e-12);
}

TEST_CASE("L1 of Ax vs b matches finite differences") {
    Rng rng(11);
    Tensor a = Tensor::randn({4, 4}, rng);
    Tensor b = Tensor::randn({4, 1}, rng);
    auto f = [&](const Tensor& x) { return mean_all(abs_t(sub(matmul(a, x), b))); };
    Tensor x0 = Tensor::randn({4, 1}, rng);
    auto rep = grad_check(f, x0);
    CHECK(rep.pass);
}

TEST_CASE("grad_check covers the whole op suite") {
    Rng rng(5);
    auto run = [&](const char* name, std::function<Tensor(const Tensor&)> f, Shape s) {
        Tensor x0 = Tensor::randn(s, rng, 0.7);
        auto rep = grad_check(f, x0, 1e-4, 1e-4);
        INFO(name << " max_rel_err=" << rep.max_rel_err);
        CHECK(rep.pass);
    };
    Tensor other = Tensor::randn({4, 4}, rng);
    run("add", [&](const Tensor& x) { return sum_all(add(x, other)); }, {4, 4});
    run("sub", [&](const Tensor& x) { return sum_all(sub(other, x)); }, {4, 4});
    run("mul", [&](const Tensor& x) { return sum_all(mul(x, other)); }, {4, 4});
    run("smul", [&](const Tensor& x) { return sum_all(smul(x, -1.7)); }, {4, 4});
    run("affine", [&](const Tensor& x) { return sum_all(affine(x, 2.0, 0.5)); }, {4, 4});
    run("neg", [&](const Tensor& x) { return sum_all(neg(x)); }, {4, 4});
    run("matmul_lhs", [&](const Tensor& x) { return mean_all(matmul(x, other)); }, {3, 4});
    run("matmul_rhs", [&](const Tensor& x) { return mean_all(matmul(other, x)); }, {4, 3});
    run("matmul_batched",
        [&](const Tensor& x) { return mean_all(matmul(x, other)); }, {2, 3, 4});
    run("reshape", [&](const Tensor& x) { return sum_all(square(reshape(x, {2, 8}))); }, {4, 4});
    run("transpose",
        [&](const Tensor& x) { return sum_all(mul(transpose(x, 0, 1), other)); }, {4, 4});
    run("concat", [&](const Tensor& x) {
        return sum_all(square(concat({x, smul(x, 2.0)}, 0)));
    }, {2, 3});
    run("slice", [&](const Tensor& x) { return sum_all(square(slice(x, 1, 1, 2))); }, {4, 4});
    run("gather_rows", [&](const Tensor& x) {
        return sum_all(square(gather_rows(x, {2, 0, 2, 3})));
    }, {4, 4});
    run("softmax", [&](const Tensor& x) {
        return sum_all(mul(softmax_lastdim(x), other));
    }, {4, 4});
    run("mean_all", [&](const Tensor& x) { return mean_all(x); }, {4, 4});
    run("layer_norm", [&](const Tensor& x) {
        return sum_all(mul(layer_norm(x), other));
    }, {4, 4});
    run("silu", [&](const Tensor& x) { return sum_all(silu(x)); }, {4, 4});
    run("gelu", [&](const Tensor& x) { return sum_all(gelu(x)); }, {4, 4});
    run("sigmoid", [&](const Tensor& x) { return sum_all(sigmoid(x)); }, {4, 4});
    run("softplus", [&](const Tensor& x) { return sum_all(softplus(x)); }, {4, 4});
    run("abs", [&](const Tensor& x) { return sum_all(abs_t(x)); }, {4, 4});
    run("square", [&](const Tensor& x) { return sum_all(square(x)); }, {4, 4});
    run("exp", [&](const Tensor& x) { return sum_all(exp_t(x)); }, {4, 4});

    // sqrt needs positive inputs away from zero
    Tensor pos = Tensor::leaf({4}, {0.5, 1.2, 2.0, 3.3});
    auto rep = grad_check([](const Tensor& x) { return sum_all(sqrt_t(x)); }, pos);
    CHECK(rep.pass);
}

TEST_CASE("layer_norm grad_check on a random 8-vector") {
    Rng rng(8);
    Tensor x0 = Tensor::randn({8}, rng);
    auto rep = grad_check([](const Tensor& x) { return sum_all(layer_norm(x)); }, x0);
    CHECK(rep.pass);
}

TEST_CASE("grad_check sum of squares is near-exact") {
    Tensor x0 = Tensor::leaf({2}, {1, 2});
    auto rep = grad_check([](const Tensor& x) { return sum_all(square(x)); }, x0, 1e-4, 1e-4);
    CHECK(rep.pass);
    CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("grad_check negative control: wrong gradient fails") {
    // custom op with a deliberately wrong backward closure
    auto bad_double = [](const Tensor& x) {
        Tensor out(x.shape, std::vector<double>(x.data));
        for (auto& v : out.data) v *= 2.0;
        if (grad_enabled() && x.node) {
            auto xn = x.node;
            out.node = std::make_shared<Node>();
            out.node->shape = out.shape;
            out.node->size = out.data.size();
            out.node->op = "bad_double";
            out.node->parents = {xn};
            out.node->backprop = [xn](const std::vector<double>& g) {
                xn->accumulate(g.data(), g.size()); // claims d(out)/dx == 1; truth is 2
            };
        }
        return out;
    };
    Tensor x0 = Tensor::leaf({3}, {0.4, -1.0, 2.0});
    auto rep = grad_check([&](const Tensor& x) { return sum_all(bad_double(x)); }, x0);
    CHECK_FALSE(rep.pass);
}

TEST_CASE("matmul associativity") {
    Rng rng(17);
    Tensor a = Tensor::randn({3, 5}, rng);
    Tensor b = Tensor::randn({5, 4}, rng);
    Tensor c = Tensor::randn({4, 6}, rng);
    Tensor left = matmul(matmul(a, b), c);
    Tensor right = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < left.size(); ++i) {
        double denom = std::max(std::fabs(left.data[i]), 1e-30);
        CHECK(std::fabs(left.data[i] - right.data[i]) / denom < 1e-10);
    }
}

TEST_CASE("shape and finiteness errors name the op") {
    Tensor a = Tensor::leaf({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor b = Tensor::leaf({2, 2}, {1, 2, 3, 4});
    CHECK_THROWS_WITH_AS(add(a, b), doctest::Contains("add"), std::runtime_error);
    CHECK_THROWS_WITH_AS(matmul(a, a), doctest::Contains("matmul"), std::runtime_error);
    Tensor n = Tensor::leaf({1}, {0.0});
    Tensor inf = smul(Tensor::leaf({1}, {1.0}), 1e308);
    CHECK_THROWS_AS(mul(inf, inf), std::runtime_error); // overflow to inf
    CHECK_THROWS_AS(backward(Tensor::leaf({2}, {1, 2})), std::runtime_error); // non-scalar
}

TEST_CASE("tensor file round trip") {
    Rng rng(23);
    Tensor t = Tensor::randn({2, 3, 4}, rng);
    const char* path = "roundtrip.wvt";
    save_tensor(t, path);
    Tensor u = load_tensor(path);
    CHECK(u.shape == t.shape);
    CHECK(u.data == t.data);
    std::remove(path);
}

TEST_CASE("broadcast over leading axes") {
    Tensor a = Tensor::leaf({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor row = Tensor::leaf({3}, {10, 20, 30});
    Tensor s = add(a, row);
    CHECK(s.data == std::vector<double>{11, 22, 33, 14, 25, 36});
    auto rep = grad_check(
        [&](const Tensor& x) { return sum_all(square(add(a, x))); }, row);
    CHECK(rep.pass);
}

TEST_CASE("rng determinism and normal moments") {
    Rng a(99), b(99);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(7);
    double mu = 0, m2 = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double v = c.normal();
        mu += v;
        m2 += v * v;
    }
    mu /= n;
    CHECK(std::fabs(mu) < 0.03);
    CHECK(std::fabs(m2 / n - 1.0) < 0.05);
}
