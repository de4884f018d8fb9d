#include "windvr/apt.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "windvr/metrics.hpp"
#include "windvr/pipeline.hpp"

namespace windvr::apt {

namespace {

void emit(const MetricsSink& sink, std::size_t step, const char* name, double value) {
    if (!sink) return;
    std::ostringstream os;
    os.precision(17);
    os << "{\"step\":" << step << ",\"loss_name\":\"" << name << "\",\"value\":" << value << "}";
    sink(os.str());
}

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw std::runtime_error(std::string("apt: non-finite ") + what);
}

// One-step generation: x = eps, v = G(eps, tau=1), x0_hat = eps - v.
Tensor one_step_sample(const Backbone& gen, const PreparedClip& p, const Tensor& eps) {
    Tensor v = gen.forward(eps, 1.0, p.lq_up, true, p.grid, p.layout).velocity;
    return sub(eps, v);
}

} // namespace

GenStep generator_step(Backbone& gen, const Discriminator& disc, windvr::AdamW& opt,
                       const data::PairStream::Pair& pair, const loss::LossWeights& w,
                       GanKind gan, Rng& rng) {
    GenStep out;
    if (w.l1 == 0.0 && w.fm == 0.0 && w.gan == 0.0) return out;

    PreparedClip p = prepare_clip(pair.lq, &pair.hq, gen.cfg.counts, 4);
    Tensor eps = Tensor::randn(p.hq.shape, rng);
    Tensor fake = one_step_sample(gen, p, eps);

    Tensor total = Tensor::zeros({1});
    if (w.l1 != 0.0) {
        Tensor l = loss::l1_loss(fake, p.hq);
        out.l1 = l.item();
        total = add(total, smul(l, w.l1));
    }
    if (w.fm != 0.0 || w.gan != 0.0) {
        Discriminator::Forward df = disc.forward(fake, p.lq_up, p.grid, p.layout);
        // The real branch carries no generator gradient; evaluate it untracked.
        Discriminator::Forward dr;
        {
            NoGrad ng;
            dr = disc.forward(p.hq, p.lq_up, p.grid, p.layout);
        }
        if (w.fm != 0.0) {
            Tensor l = loss::feature_matching(df.taps, dr.taps);
            out.fm = l.item();
            total = add(total, smul(l, w.fm));
        }
        if (w.gan != 0.0) {
            Tensor l = gan == GanKind::rpgan ? loss::rpgan_g_loss(dr.logit, df.logit)
                                             : loss::nonsat_g_loss(df.logit);
            out.gan = l.item();
            total = add(total, smul(l, w.gan));
        }
    }
    out.total = total.item();
    require_finite(out.total, "generator loss");
    backward(total);
    opt.step();
    opt.zero_grad();
    out.stepped = true;
    return out;
}

DiscStep discriminator_step(const Backbone& gen, Discriminator& disc, windvr::AdamW& opt,
                            const data::PairStream::Pair& pair, const loss::LossWeights& w,
                            GanKind gan, Rng& rng) {
    DiscStep out;
    if (w.gan_d == 0.0 && w.r1 == 0.0 && w.r2 == 0.0) return out;

    PreparedClip p = prepare_clip(pair.lq, &pair.hq, gen.cfg.counts, 4);
    Tensor fake;
    {
        NoGrad ng;
        Tensor eps = Tensor::randn(p.hq.shape, rng);
        fake = one_step_sample(gen, p, eps);
    }

    Discriminator::Forward dr = disc.forward(p.hq, p.lq_up, p.grid, p.layout);
    Discriminator::Forward df = disc.forward(fake, p.lq_up, p.grid, p.layout);

    Tensor total = Tensor::zeros({1});
    if (w.gan_d != 0.0) {
        Tensor l = gan == GanKind::rpgan ? loss::rpgan_d_loss(dr.logit, df.logit)
                                         : loss::nonsat_d_loss(dr.logit, df.logit);
        out.gan = l.item();
        total = add(total, smul(l, w.gan_d));
    }
    if (w.r1 != 0.0) {
        const double sigma = w.sigma_rel * loss::batch_std(p.hq);
        if (sigma > 0.0) {
            Discriminator::Forward drp =
                disc.forward(loss::perturb(p.hq, sigma, rng), p.lq_up, p.grid, p.layout);
            Tensor l = loss::approx_r_term(dr.logit, drp.logit);
            out.r1 = l.item();
            total = add(total, smul(l, w.r1));
        }
    }
    if (w.r2 != 0.0) {
        const double sigma = w.sigma_rel * loss::batch_std(fake);
        if (sigma > 0.0) {
            Discriminator::Forward dfp =
                disc.forward(loss::perturb(fake, sigma, rng), p.lq_up, p.grid, p.layout);
            Tensor l = loss::approx_r_term(df.logit, dfp.logit);
            out.r2 = l.item();
            total = add(total, smul(l, w.r2));
        }
    }
    out.total = total.item();
    require_finite(out.total, "discriminator loss");
    backward(total);
    opt.step();
    opt.zero_grad();
    out.stepped = true;
    return out;
}

TrainResult train_apt(Backbone& gen, Discriminator& disc, const TrainConfig& cfg,
                      const MetricsSink& sink) {
    TrainResult res;
    AdamW opt_g(gen.param_list(), cfg.lr_g);
    AdamW opt_d(disc.param_list(), cfg.lr_d);
    data::PairStream stream(cfg.stream, cfg.seed);
    Rng rng(cfg.seed ^ 0xab7c0deULL);

    // Held-out pair for periodic evaluation, drawn from an independent stream.
    data::PairStream::Pair eval_pair;
    if (cfg.eval_cadence > 0) {
        data::PairStream eval_stream(cfg.stream, cfg.seed ^ 0xe5a1ULL);
        eval_pair = eval_stream.next(0);
    }

    for (std::size_t it = 0; it < cfg.iters; ++it) {
        // Discriminator update; generator parameters must stay untouched.
        {
            auto pair = stream.next(it);
            const uint64_t g_sum = gen.checksum();
            gen.zero_grads();
            DiscStep d = discriminator_step(gen, disc, opt_d, pair, cfg.weights, cfg.gan, rng);
            gen.zero_grads();
            if (gen.checksum() != g_sum)
                throw std::runtime_error("train_apt: generator changed during discriminator step");
            res.d_trace.push_back(d.total);
            emit(sink, it, "d_gan", d.gan);
            emit(sink, it, "d_r1", d.r1);
            emit(sink, it, "d_r2", d.r2);
            emit(sink, it, "d_total", d.total);
        }
        // Generator update; discriminator parameters must stay untouched.
        {
            auto pair = stream.next(it);
            const uint64_t d_sum = disc.checksum();
            disc.zero_grads();
            GenStep g = generator_step(gen, disc, opt_g, pair, cfg.weights, cfg.gan, rng);
            disc.zero_grads();
            if (disc.checksum() != d_sum)
                throw std::runtime_error("train_apt: discriminator changed during generator step");
            res.g_trace.push_back(g.total);
            emit(sink, it, "g_l1", g.l1);
            emit(sink, it, "g_fm", g.fm);
            emit(sink, it, "g_gan", g.gan);
            emit(sink, it, "g_total", g.total);
        }
        if (cfg.eval_cadence > 0 && (it + 1) % cfg.eval_cadence == 0) {
            SamplerConfig sc;
            sc.steps = 1;
            sc.seed = cfg.seed ^ 0x5eedULL;
            data::Clip restored = restore_clip(gen, eval_pair.lq, sc);
            const double ps = metrics::psnr(restored, eval_pair.hq);
            const double ss = metrics::ssim(restored, eval_pair.hq);
            res.eval_psnr.push_back(ps);
            res.eval_ssim.push_back(ss);
            emit(sink, it, "eval_psnr", ps);
            emit(sink, it, "eval_ssim", ss);
        }
    }
    return res;
}

} // namespace windvr::apt
