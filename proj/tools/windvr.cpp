#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "windvr/apt.hpp"
#include "windvr/data.hpp"
#include "windvr/distill.hpp"
#include "windvr/metrics.hpp"
#include "windvr/model.hpp"
#include "windvr/pipeline.hpp"

using json = nlohmann::json;
using namespace windvr;

namespace {

std::vector<std::size_t> parse_sizes(const std::string& csv) {
    std::vector<std::size_t> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoull(item));
    return out;
}

distill::MetricsSink stdout_sink() {
    return [](const std::string& line) { std::cout << line << "\n"; };
}

int cmd_gen_data(uint64_t seed, std::size_t count, std::size_t frames, const std::string& hw,
                 const std::string& out_dir) {
    auto dims = parse_sizes(hw);
    if (dims.size() != 2) throw std::runtime_error("--hw expects H,W");
    std::filesystem::create_directories(out_dir);
    data::DegradationParams params;
    for (std::size_t i = 0; i < count; ++i) {
        data::Clip hq = data::synth_video(seed + i, frames, dims[0], dims[1]);
        data::Clip lq = data::degrade(hq, params, seed + 1000003 * (i + 1));
        char name[64];
        std::snprintf(name, sizeof(name), "/hq_%04zu.wvc", i);
        data::save_clip(hq, out_dir + name);
        std::snprintf(name, sizeof(name), "/lq_%04zu.wvc", i);
        data::save_clip(lq, out_dir + name);
    }
    std::cout << json{{"written", count}, {"dir", out_dir}}.dump() << "\n";
    return 0;
}

data::StreamConfig stream_from_json(const json& j) {
    data::StreamConfig sc;
    if (j.contains("aspects")) {
        sc.aspects.clear();
        for (auto& a : j["aspects"]) sc.aspects.emplace_back(a[0].get<std::size_t>(), a[1].get<std::size_t>());
    }
    if (j.contains("curriculum")) {
        sc.curriculum.clear();
        for (auto& c : j["curriculum"])
            sc.curriculum.emplace_back(c[0].get<std::size_t>(), c[1].get<std::size_t>());
    }
    if (j.contains("degradation")) {
        auto& d = j["degradation"];
        auto& p = sc.degradation;
        p.blur_sigma_min = d.value("blur_sigma_min", p.blur_sigma_min);
        p.blur_sigma_max = d.value("blur_sigma_max", p.blur_sigma_max);
        p.noise_sigma_min = d.value("noise_sigma_min", p.noise_sigma_min);
        p.noise_sigma_max = d.value("noise_sigma_max", p.noise_sigma_max);
        p.quant_levels_min = d.value("quant_levels_min", p.quant_levels_min);
        p.quant_levels_max = d.value("quant_levels_max", p.quant_levels_max);
        p.factor = d.value("factor", p.factor);
    }
    return sc;
}

apt::TrainConfig apt_config_from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file " + path);
    json j = json::parse(f);
    apt::TrainConfig cfg;
    cfg.iters = j.value("iters", cfg.iters);
    cfg.lr_g = j.value("lr_g", cfg.lr_g);
    cfg.lr_d = j.value("lr_d", cfg.lr_d);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.eval_cadence = j.value("eval_cadence", cfg.eval_cadence);
    if (j.value("gan", std::string("rpgan")) == "nonsat") cfg.gan = apt::GanKind::nonsat;
    auto& w = cfg.weights;
    w.l1 = j.value("l1", w.l1);
    w.fm = j.value("fm", w.fm);
    w.gan = j.value("gan_weight", w.gan);
    w.gan_d = j.value("gan_d", w.gan_d);
    w.r1 = j.value("r1", w.r1);
    w.r2 = j.value("r2", w.r2);
    w.sigma_rel = j.value("sigma_rel", w.sigma_rel);
    if (j.contains("stream")) cfg.stream = stream_from_json(j["stream"]);
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"windvr: one-step windowed-diffusion video restoration"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "write procedural HQ/LQ clip pairs");
    uint64_t gd_seed = 0;
    std::size_t gd_count = 8, gd_frames = 1;
    std::string gd_hw = "64,64", gd_out = "data";
    gen->add_option("--seed", gd_seed);
    gen->add_option("--count", gd_count);
    gen->add_option("--frames", gd_frames);
    gen->add_option("--hw", gd_hw);
    gen->add_option("--out", gd_out)->required();

    // train-teacher
    auto* tt = app.add_subcommand("train-teacher", "flow-matching pretraining of the base model");
    std::size_t tt_iters = 800, tt_dim = 64, tt_blocks = 6;
    double tt_lr = 3e-4;
    uint64_t tt_seed = 1;
    std::string tt_out;
    tt->add_option("--iters", tt_iters);
    tt->add_option("--lr", tt_lr);
    tt->add_option("--seed", tt_seed);
    tt->add_option("--model-dim", tt_dim);
    tt->add_option("--blocks", tt_blocks);
    tt->add_option("--out", tt_out)->required();

    // distill
    auto* ds = app.add_subcommand("distill", "progressive step-count halving");
    std::string ds_teacher, ds_schedule = "64,32,16,8,4,2,1", ds_out;
    std::size_t ds_iters = 500;
    double ds_lr = 2e-5;
    uint64_t ds_seed = 1;
    ds->add_option("--teacher", ds_teacher)->required();
    ds->add_option("--schedule", ds_schedule);
    ds->add_option("--iters", ds_iters);
    ds->add_option("--lr", ds_lr);
    ds->add_option("--seed", ds_seed);
    ds->add_option("--out", ds_out)->required();

    // train-apt
    auto* ta = app.add_subcommand("train-apt", "adversarial post-training of a one-step model");
    std::string ta_gen, ta_disc, ta_config, ta_out;
    ta->add_option("--gen", ta_gen)->required();
    ta->add_option("--disc", ta_disc);
    ta->add_option("--config", ta_config)->required();
    ta->add_option("--out", ta_out)->required();

    // restore
    auto* rs = app.add_subcommand("restore", "run the sampler on an LQ clip");
    std::string rs_ckpt, rs_in, rs_out;
    std::size_t rs_steps = 1;
    double rs_cfg = 1.0;
    uint64_t rs_seed = 0;
    rs->add_option("--ckpt", rs_ckpt)->required();
    rs->add_option("--in", rs_in)->required();
    rs->add_option("--steps", rs_steps);
    rs->add_option("--cfg", rs_cfg);
    rs->add_option("--seed", rs_seed);
    rs->add_option("--out", rs_out)->required();

    // eval
    auto* ev = app.add_subcommand("eval", "full-reference metrics for a restored clip");
    std::string ev_pred, ev_ref, ev_counts = "1,3,3";
    ev->add_option("--pred", ev_pred)->required();
    ev->add_option("--ref", ev_ref)->required();
    ev->add_option("--counts", ev_counts);

    // windows
    auto* wn = app.add_subcommand("windows", "print the adaptive window partition of a grid");
    std::string wn_grid, wn_counts = "1,3,3";
    wn->add_option("--grid", wn_grid)->required();
    wn->add_option("--counts", wn_counts);

    // plot-data
    auto* pd = app.add_subcommand("plot-data", "CSV of sampler step count vs PSNR");
    std::string pd_ckpt, pd_steps = "1,2,4,8,16,32,64";
    uint64_t pd_seed = 0;
    std::size_t pd_clips = 4;
    pd->add_option("--ckpt", pd_ckpt)->required();
    pd->add_option("--steps", pd_steps);
    pd->add_option("--seed", pd_seed);
    pd->add_option("--clips", pd_clips);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*gen) return cmd_gen_data(gd_seed, gd_count, gd_frames, gd_hw, gd_out);

        if (*tt) {
            ModelConfig mc;
            mc.model_dim = tt_dim;
            mc.num_blocks = tt_blocks;
            Backbone model = Backbone::init(mc, tt_seed);
            data::StreamConfig sc;
            data::PairStream stream(sc, tt_seed ^ 0x7eacULL);
            distill::pretrain_flow(model, stream, tt_iters, tt_lr, tt_seed, 0.1, stdout_sink());
            model.save(tt_out, tt_iters, "teacher");
            return 0;
        }

        if (*ds) {
            Backbone teacher = Backbone::load(ds_teacher);
            distill::DistillSchedule sched;
            sched.stage_steps = parse_sizes(ds_schedule);
            sched.iters_per_stage = ds_iters;
            data::StreamConfig sc;
            auto res = distill::run_progressive(teacher, sched, sc, ds_lr, ds_seed, stdout_sink());
            res.student.save(ds_out, ds_iters * (sched.stage_steps.size() - 1), "student");
            return 0;
        }

        if (*ta) {
            Backbone g = Backbone::load(ta_gen);
            apt::TrainConfig cfg = apt_config_from_file(ta_config);
            Discriminator d = ta_disc.empty()
                                  ? Discriminator::from_backbone(distill::clone_model(g), cfg.seed)
                                  : Discriminator::load(ta_disc);
            apt::train_apt(g, d, cfg, stdout_sink());
            g.save(ta_out, cfg.iters, "apt");
            d.save(ta_out + "/disc", cfg.iters);
            return 0;
        }

        if (*rs) {
            Backbone model = Backbone::load(rs_ckpt);
            data::Clip lq = data::load_clip(rs_in);
            SamplerConfig sc{rs_steps, rs_cfg, rs_seed};
            data::Clip out = restore_clip(model, lq, sc);
            data::save_clip(out, rs_out);
            return 0;
        }

        if (*ev) {
            data::Clip pred = data::load_clip(ev_pred);
            data::Clip ref = data::load_clip(ev_ref);
            auto cv = parse_sizes(ev_counts);
            win::GridShape grid{pred.frames, pred.height, pred.width};
            win::WindowLayout layout = win::partition(grid, win::training_window_size(grid, {cv[0], cv[1], cv[2]}));
            json rep{{"psnr_db", metrics::psnr(pred, ref)},
                     {"ssim", metrics::ssim(pred, ref)},
                     {"boundary_artifact_score", metrics::boundary_artifact_score(pred, layout)}};
            std::cout << rep.dump() << "\n";
            return 0;
        }

        if (*wn) {
            auto gv = parse_sizes(wn_grid);
            auto cv = parse_sizes(wn_counts);
            if (gv.size() != 3 || cv.size() != 3)
                throw std::runtime_error("--grid and --counts expect t,h,w triples");
            win::GridShape grid{gv[0], gv[1], gv[2]};
            win::WindowCounts counts{cv[0], cv[1], cv[2]};
            win::WindowSize size = win::test_window_size(grid, counts);
            win::WindowLayout layout = win::partition(grid, size);
            json boxes = json::array();
            for (const auto& b : layout.windows)
                boxes.push_back(json{{"t0", b.t0}, {"h0", b.h0}, {"w0", b.w0},
                                     {"et", b.et}, {"eh", b.eh}, {"ew", b.ew}});
            json sz = json::array({size.p_t, size.p_h, size.p_w});
            std::cout << json{{"window_size", sz}, {"boxes", boxes}}.dump() << "\n";
            return 0;
        }

        if (*pd) {
            Backbone model = Backbone::load(pd_ckpt);
            auto steps = parse_sizes(pd_steps);
            data::StreamConfig sc;
            std::cout << "steps,psnr_db\n";
            for (std::size_t n : steps) {
                data::PairStream stream(sc, pd_seed ^ 0x91a7ULL);
                double acc = 0.0;
                for (std::size_t i = 0; i < pd_clips; ++i) {
                    auto pair = stream.next(i);
                    SamplerConfig scfg{n, 1.0, pd_seed + i};
                    data::Clip out = restore_clip(model, pair.lq, scfg);
                    acc += metrics::psnr(out, pair.hq);
                }
                std::cout << n << "," << acc / static_cast<double>(pd_clips) << "\n";
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
