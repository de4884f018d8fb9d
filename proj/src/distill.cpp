#include "windvr/distill.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "windvr/losses.hpp"
#include "windvr/optim.hpp"

namespace windvr::distill {

void DistillSchedule::validate() const {
    if (stage_steps.size() < 2) throw std::runtime_error("DistillSchedule: need at least two entries");
    for (std::size_t i = 0; i + 1 < stage_steps.size(); ++i)
        if (stage_steps[i] != 2 * stage_steps[i + 1])
            throw std::runtime_error("DistillSchedule: consecutive step counts must halve");
    if (iters_per_stage == 0) throw std::runtime_error("DistillSchedule: zero iterations per stage");
}

Backbone clone_model(const Backbone& m) {
    Backbone c;
    c.cfg = m.cfg;
    for (const auto& [name, t] : m.params) c.params[name] = Tensor::leaf(t.shape, t.data);
    return c;
}

Tensor two_step_target(const VelocityFn& teacher, const Tensor& x_a, double tau_a, double tau_c,
                       double cfg_scale) {
    if (tau_a == tau_c) throw std::runtime_error("two_step_target: tau_a == tau_c");
    NoGrad ng;
    const double tau_b = 0.5 * (tau_a + tau_c);
    Tensor v1 = cfg_velocity(teacher, x_a, tau_a, cfg_scale);
    Tensor x_b = sub(x_a, smul(v1, tau_a - tau_b));
    Tensor v2 = cfg_velocity(teacher, x_b, tau_b, cfg_scale);
    Tensor x_c = sub(x_b, smul(v2, tau_b - tau_c));
    return smul(sub(x_a, x_c), 1.0 / (tau_a - tau_c));
}

namespace {

void emit(const MetricsSink& sink, std::size_t step, const char* name, double value) {
    if (!sink) return;
    std::ostringstream os;
    os.precision(17);
    os << "{\"step\":" << step << ",\"loss_name\":\"" << name << "\",\"value\":" << value << "}";
    sink(os.str());
}

} // namespace

void pretrain_flow(Backbone& model, data::PairStream& stream, std::size_t iters, double lr,
                   uint64_t seed, double cond_dropout, const MetricsSink& sink) {
    AdamW opt(model.param_list(), lr);
    Rng rng(seed);
    NoiseSchedule schedule;
    for (std::size_t it = 0; it < iters; ++it) {
        auto pair = stream.next(it);
        PreparedClip p = prepare_clip(pair.lq, &pair.hq, model.cfg.counts,
                                      4);
        Tensor eps = Tensor::randn(p.hq.shape, rng);
        const double tau = schedule.tau(rng.uniform_int(0, schedule.num_steps - 1));
        Tensor x_tau;
        Tensor target;
        {
            NoGrad ng;
            x_tau = interpolate(p.hq, eps, tau);
            target = velocity_target(p.hq, eps);
        }
        const bool use_cond = rng.uniform() >= cond_dropout;
        Tensor v = model.forward(x_tau, tau, p.lq_up, use_cond, p.grid, p.layout).velocity;
        Tensor loss = loss::mse_loss(v, target);
        backward(loss);
        opt.step();
        opt.zero_grad();
        emit(sink, it, "pretrain_mse", loss.item());
    }
}

StageResult distill_stage(Backbone& student, const Backbone& teacher, data::PairStream& stream,
                          std::size_t steps_from, std::size_t steps_to, std::size_t iters,
                          double lr, uint64_t seed, double teacher_cfg, const MetricsSink& sink) {
    if (steps_from != 2 * steps_to)
        throw std::runtime_error("distill_stage: steps_from must be exactly twice steps_to");
    StageResult res;
    res.steps_from = steps_from;
    res.steps_to = steps_to;
    res.teacher_cfg = teacher_cfg;

    AdamW opt(student.param_list(), lr);
    Rng rng(seed);
    for (std::size_t it = 0; it < iters; ++it) {
        auto pair = stream.next(it);
        PreparedClip p = prepare_clip(pair.lq, &pair.hq, student.cfg.counts, 4);
        Tensor eps = Tensor::randn(p.hq.shape, rng);

        // tau_a sampled on the student's own step grid: one student step spans
        // exactly two teacher steps.
        const auto k = rng.uniform_int(0, steps_to - 1);
        const double tau_a = static_cast<double>(k + 1) / static_cast<double>(steps_to);
        const double tau_c = static_cast<double>(k) / static_cast<double>(steps_to);

        Tensor x_a, target;
        {
            NoGrad ng;
            x_a = interpolate(p.hq, eps, tau_a);
        }
        target = two_step_target(velocity_fn(teacher, p), x_a, tau_a, tau_c, teacher_cfg);

        Tensor v = student.forward(x_a, tau_a, p.lq_up, true, p.grid, p.layout).velocity;
        Tensor loss = loss::mse_loss(v, target);
        const double lv = loss.item();
        if (!std::isfinite(lv)) throw std::runtime_error("distill_stage: non-finite loss");
        backward(loss);
        opt.step();
        opt.zero_grad();
        res.mse_trace.push_back(lv);
        emit(sink, it, "distill_mse", lv);
    }
    return res;
}

ProgressiveResult run_progressive(const Backbone& teacher, const DistillSchedule& schedule,
                                  const data::StreamConfig& stream_cfg, double lr, uint64_t seed,
                                  const MetricsSink& sink) {
    schedule.validate();
    ProgressiveResult out;
    Backbone current = clone_model(teacher);
    for (std::size_t s = 0; s + 1 < schedule.stage_steps.size(); ++s) {
        const std::size_t from = schedule.stage_steps[s];
        const std::size_t to = schedule.stage_steps[s + 1];
        Backbone student = clone_model(current);
        data::PairStream stream(stream_cfg, seed ^ (0xd157ULL + 77 * s));
        out.stages.push_back(distill_stage(student, current, stream, from, to,
                                           schedule.iters_per_stage, lr,
                                           seed + 1000 * (s + 1), schedule.teacher_cfg(from), sink));
        current = std::move(student);
    }
    out.student = std::move(current);
    return out;
}

} // namespace windvr::distill
