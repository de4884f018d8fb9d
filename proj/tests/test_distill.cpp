#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "windvr/distill.hpp"
#include "windvr/rng.hpp"

using namespace windvr;

TEST_CASE("two-step target for a linear-in-tau velocity field") {
    // v(x, tau) = tau * c: two half-steps from tau_a=1 to tau_c=0.5 sample the
    // field at tau=1 and tau=0.75, so the averaged slope is (1 + 0.75)/2 * c.
    Tensor c = Tensor::leaf({3}, {1.0, -2.0, 0.5});
    auto field = [&](const Tensor&, double tau, bool) { return smul(c, tau); };
    Rng rng(2);
    Tensor x = Tensor::randn({3}, rng);
    Tensor target = distill::two_step_target(field, x, 1.0, 0.5, 1.0);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(target.data[i] == doctest::Approx(0.875 * c.data[i]).epsilon(1e-14));
}

TEST_CASE("two-step target reproduces a constant-velocity teacher exactly") {
    Tensor c = Tensor::leaf({4}, {0.3, -1.0, 2.0, 0.0});
    auto field = [&](const Tensor&, double, bool) { return c.detached(); };
    Rng rng(3);
    Tensor x = Tensor::randn({4}, rng);
    Tensor target = distill::two_step_target(field, x, 0.5, 0.25, 1.0);
    // cancellation in x_a - x_c keeps this from being bitwise; near-exact is enough
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::fabs(target.data[i] - c.data[i]) < 1e-12);
}

TEST_CASE("two-step target rejects a degenerate interval") {
    Tensor c = Tensor::leaf({1}, {1.0});
    auto field = [&](const Tensor&, double, bool) { return c.detached(); };
    CHECK_THROWS_AS(distill::two_step_target(field, c, 0.5, 0.5, 1.0), std::runtime_error);
}

TEST_CASE("schedule validation and cfg routing") {
    distill::DistillSchedule s;
    s.validate();
    CHECK(s.teacher_cfg(64) == 7.5);
    CHECK(s.teacher_cfg(32) == 1.0);
    CHECK(s.teacher_cfg(2) == 1.0);
    distill::DistillSchedule bad;
    bad.stage_steps = {64, 16, 1};
    CHECK_THROWS_AS(bad.validate(), std::runtime_error);
}

TEST_CASE("clone_model is a deep, independent copy") {
    ModelConfig mc;
    mc.model_dim = 8;
    mc.num_heads = 2;
    mc.num_blocks = 1;
    Backbone a = Backbone::init(mc, 9);
    Backbone b = distill::clone_model(a);
    CHECK(a.checksum() == b.checksum());
    b.params.begin()->second.data[0] += 1.0;
    CHECK(a.checksum() != b.checksum());
}

TEST_CASE("a distillation stage runs and decreases nothing unexpectedly") {
    ModelConfig mc;
    mc.model_dim = 8;
    mc.num_heads = 2;
    mc.num_blocks = 2;
    mc.mlp_ratio = 2;
    Backbone teacher = Backbone::init(mc, 5);
    Rng nz(6);
    for (Tensor* p : teacher.param_list())
        for (auto& v : p->data) v += 0.02 * nz.normal();

    data::StreamConfig sc;
    sc.aspects = {{8, 8}};
    data::PairStream stream(sc, 77);
    Backbone student = distill::clone_model(teacher);
    auto res = distill::distill_stage(student, teacher, stream, 4, 2, 8, 1e-4, 11, 1.0);
    CHECK(res.mse_trace.size() == 8);
    for (double v : res.mse_trace) CHECK(std::isfinite(v));
    CHECK(res.steps_from == 4);
    CHECK(res.steps_to == 2);
    // students that equal their teacher start with tiny distillation error
    CHECK(res.mse_trace.front() < 1.0);
    CHECK_THROWS_AS(distill::distill_stage(student, teacher, stream, 4, 3, 1, 1e-4, 1, 1.0),
                    std::runtime_error);
}

TEST_CASE("pretraining is deterministic under a fixed seed") {
    ModelConfig mc;
    mc.model_dim = 8;
    mc.num_heads = 2;
    mc.num_blocks = 1;
    mc.mlp_ratio = 2;
    data::StreamConfig sc;
    sc.aspects = {{8, 8}};

    Backbone m1 = Backbone::init(mc, 13);
    Backbone m2 = Backbone::init(mc, 13);
    data::PairStream s1(sc, 21), s2(sc, 21);
    distill::pretrain_flow(m1, s1, 5, 1e-3, 31);
    distill::pretrain_flow(m2, s2, 5, 1e-3, 31);
    CHECK(m1.checksum() == m2.checksum());
}
