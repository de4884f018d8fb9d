#pragma once

#include <functional>
#include <string>
#include <vector>

#include "windvr/data.hpp"
#include "windvr/flow.hpp"
#include "windvr/model.hpp"
#include "windvr/pipeline.hpp"

namespace windvr::distill {

struct DistillSchedule {
    std::vector<std::size_t> stage_steps{64, 32, 16, 8, 4, 2, 1};
    std::size_t iters_per_stage = 500;
    double cfg_at_64 = 7.5;
    double cfg_other = 1.0;

    void validate() const;
    double teacher_cfg(std::size_t teacher_steps) const {
        return teacher_steps == 64 ? cfg_at_64 : cfg_other;
    }
};

struct StageResult {
    std::size_t steps_from = 0, steps_to = 0;
    double teacher_cfg = 1.0;
    std::vector<double> mse_trace;
};

// Velocity whose single Euler step from x_a lands where two teacher half-steps
// land: v* = (x_a - x_c) / (tau_a - tau_c).
Tensor two_step_target(const VelocityFn& teacher, const Tensor& x_a, double tau_a, double tau_c,
                       double cfg_scale);

using MetricsSink = std::function<void(const std::string& json_line)>;

// Flow-matching pretraining of the base multi-step model (the would-be
// teacher): MSE on the velocity field at uniformly sampled schedule timesteps,
// with condition dropout for CFG.
void pretrain_flow(Backbone& model, data::PairStream& stream, std::size_t iters, double lr,
                   uint64_t seed, double cond_dropout = 0.1, const MetricsSink& sink = {});

// One halving stage: trains `student` (already a copy of the teacher) so one
// of its Euler steps matches two teacher steps. The teacher is never modified.
StageResult distill_stage(Backbone& student, const Backbone& teacher, data::PairStream& stream,
                          std::size_t steps_from, std::size_t steps_to, std::size_t iters,
                          double lr, uint64_t seed, double teacher_cfg,
                          const MetricsSink& sink = {});

// Chains stages across the schedule; the student of stage k becomes the
// teacher of stage k+1. Returns the one-step student.
struct ProgressiveResult {
    Backbone student;
    std::vector<StageResult> stages;
};
ProgressiveResult run_progressive(const Backbone& teacher, const DistillSchedule& schedule,
                                  const data::StreamConfig& stream_cfg, double lr, uint64_t seed,
                                  const MetricsSink& sink = {});

// Deep copy with fresh leaf tensors (independent tapes / optimizer state).
Backbone clone_model(const Backbone& m);

} // namespace windvr::distill
