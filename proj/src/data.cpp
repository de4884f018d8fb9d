#include "windvr/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace windvr::data {

namespace {

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

} // namespace

Clip synth_video(uint64_t seed, std::size_t frames, std::size_t h, std::size_t w) {
    if (frames == 0 || h == 0 || w == 0) throw std::runtime_error("synth_video: zero extent");
    Rng rng(seed);
    Clip c;
    c.frames = frames;
    c.height = h;
    c.width = w;
    c.values.assign(c.size(), 0.0);

    // Background gradient per channel.
    double gx[3], gy[3], base[3];
    for (int ch = 0; ch < 3; ++ch) {
        gx[ch] = rng.uniform(-0.25, 0.25);
        gy[ch] = rng.uniform(-0.25, 0.25);
        base[ch] = rng.uniform(0.35, 0.65);
    }

    // Band-limited texture: a few drifting low-frequency sinusoids.
    struct Wave {
        double fx, fy, ft, phase, amp;
    };
    std::vector<Wave> waves(4);
    for (auto& wv : waves) {
        wv.fx = rng.uniform(0.5, 3.0);
        wv.fy = rng.uniform(0.5, 3.0);
        wv.ft = rng.uniform(-0.5, 0.5);
        wv.phase = rng.uniform(0.0, 6.283185307179586);
        wv.amp = rng.uniform(0.02, 0.06);
    }

    // Moving shapes with linear motion.
    struct ShapeObj {
        double cx, cy, vx, vy, r;
        double color[3];
        bool rect;
    };
    std::vector<ShapeObj> shapes(3);
    for (auto& s : shapes) {
        s.cx = rng.uniform(0.1, 0.9);
        s.cy = rng.uniform(0.1, 0.9);
        s.vx = rng.uniform(-0.05, 0.05);
        s.vy = rng.uniform(-0.05, 0.05);
        s.r = rng.uniform(0.08, 0.25);
        for (int ch = 0; ch < 3; ++ch) s.color[ch] = rng.uniform(0.1, 0.9);
        s.rect = rng.uniform() < 0.5;
    }

    for (std::size_t f = 0; f < frames; ++f) {
        const double t = static_cast<double>(f);
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                const double u = static_cast<double>(x) / static_cast<double>(w);
                const double v = static_cast<double>(y) / static_cast<double>(h);
                double tex = 0.0;
                for (const auto& wv : waves)
                    tex += wv.amp * std::sin(6.283185307179586 * (wv.fx * u + wv.fy * v) +
                                             wv.ft * t + wv.phase);
                for (int ch = 0; ch < 3; ++ch) {
                    double val = base[ch] + gx[ch] * (2.0 * u - 1.0) + gy[ch] * (2.0 * v - 1.0) + tex;
                    for (const auto& s : shapes) {
                        const double sx = s.cx + s.vx * t;
                        const double sy = s.cy + s.vy * t;
                        const bool inside = s.rect
                                                ? (std::fabs(u - sx) < s.r * 0.8 && std::fabs(v - sy) < s.r * 0.8)
                                                : ((u - sx) * (u - sx) + (v - sy) * (v - sy) < s.r * s.r);
                        if (inside) val = 0.7 * s.color[ch] + 0.3 * val;
                    }
                    c.at(f, y, x, ch) = clamp01(val);
                }
            }
    }
    return c;
}

namespace {

// Separable Gaussian blur with reflect padding, per frame/channel.
void gaussian_blur_inplace(Clip& c, double sigma) {
    if (sigma <= 0.0) return;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kern(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kern[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += kern[i + radius];
    }
    for (auto& k : kern) k /= sum;
    auto reflect = [](long i, long n) {
        while (i < 0 || i >= n) {
            if (i < 0) i = -i - 1;
            if (i >= n) i = 2 * n - i - 1;
        }
        return static_cast<std::size_t>(i);
    };
    const long H = static_cast<long>(c.height), W = static_cast<long>(c.width);
    std::vector<double> tmp(c.height * c.width);
    for (std::size_t f = 0; f < c.frames; ++f)
        for (std::size_t ch = 0; ch < c.channels; ++ch) {
            // horizontal
            for (long y = 0; y < H; ++y)
                for (long x = 0; x < W; ++x) {
                    double acc = 0.0;
                    for (int k = -radius; k <= radius; ++k)
                        acc += kern[k + radius] * c.at(f, y, reflect(x + k, W), ch);
                    tmp[y * W + x] = acc;
                }
            // vertical
            for (long y = 0; y < H; ++y)
                for (long x = 0; x < W; ++x) {
                    double acc = 0.0;
                    for (int k = -radius; k <= radius; ++k)
                        acc += kern[k + radius] * tmp[reflect(y + k, H) * W + x];
                    c.at(f, y, x, ch) = acc;
                }
        }
}

} // namespace

Clip area_downsample(const Clip& hq, std::size_t factor) {
    if (factor == 0 || hq.height % factor != 0 || hq.width % factor != 0)
        throw std::runtime_error("area_downsample: factor must divide clip extents");
    Clip lq;
    lq.frames = hq.frames;
    lq.height = hq.height / factor;
    lq.width = hq.width / factor;
    lq.channels = hq.channels;
    lq.values.assign(lq.size(), 0.0);
    const double inv = 1.0 / static_cast<double>(factor * factor);
    for (std::size_t f = 0; f < lq.frames; ++f)
        for (std::size_t y = 0; y < lq.height; ++y)
            for (std::size_t x = 0; x < lq.width; ++x)
                for (std::size_t ch = 0; ch < lq.channels; ++ch) {
                    double acc = 0.0;
                    for (std::size_t dy = 0; dy < factor; ++dy)
                        for (std::size_t dx = 0; dx < factor; ++dx)
                            acc += hq.at(f, y * factor + dy, x * factor + dx, ch);
                    lq.at(f, y, x, ch) = acc * inv;
                }
    return lq;
}

Clip upsample_nearest(const Clip& lq, std::size_t factor) {
    Clip hq;
    hq.frames = lq.frames;
    hq.height = lq.height * factor;
    hq.width = lq.width * factor;
    hq.channels = lq.channels;
    hq.values.assign(hq.size(), 0.0);
    for (std::size_t f = 0; f < hq.frames; ++f)
        for (std::size_t y = 0; y < hq.height; ++y)
            for (std::size_t x = 0; x < hq.width; ++x)
                for (std::size_t ch = 0; ch < hq.channels; ++ch)
                    hq.at(f, y, x, ch) = lq.at(f, y / factor, x / factor, ch);
    return hq;
}

Clip degrade(const Clip& hq, const DegradationParams& params, uint64_t seed) {
    Rng rng(seed);
    Clip work = hq;
    const double sigma = rng.uniform(params.blur_sigma_min, params.blur_sigma_max);
    gaussian_blur_inplace(work, sigma);
    Clip lq = area_downsample(work, params.factor);
    const double nsig = rng.uniform(params.noise_sigma_min, params.noise_sigma_max);
    if (nsig > 0.0)
        for (auto& v : lq.values) v += nsig * rng.normal();
    if (params.quant_levels_max > 0) {
        const auto levels = rng.uniform_int(params.quant_levels_min, params.quant_levels_max);
        const double L = static_cast<double>(levels - 1);
        for (auto& v : lq.values) v = std::round(clamp01(v) * L) / L;
    }
    for (auto& v : lq.values) v = clamp01(v);
    return lq;
}

void save_clip(const Clip& c, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_clip: cannot open " + path);
    f.write("WVC1", 4);
    uint64_t dims[4] = {c.frames, c.height, c.width, c.channels};
    f.write(reinterpret_cast<const char*>(dims), 32);
    std::vector<float> payload(c.values.begin(), c.values.end());
    f.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!f) throw std::runtime_error("save_clip: write failed for " + path);
}

Clip load_clip(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_clip: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "WVC1", 4) != 0)
        throw std::runtime_error("load_clip: bad magic in " + path);
    uint64_t dims[4];
    f.read(reinterpret_cast<char*>(dims), 32);
    Clip c;
    c.frames = dims[0];
    c.height = dims[1];
    c.width = dims[2];
    c.channels = dims[3];
    std::vector<float> payload(c.frames * c.height * c.width * c.channels);
    f.read(reinterpret_cast<char*>(payload.data()),
           static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!f) throw std::runtime_error("load_clip: truncated file " + path);
    c.values.assign(payload.begin(), payload.end());
    return c;
}

Tensor clip_to_tensor(const Clip& c) {
    return Tensor({c.frames * c.height * c.width, c.channels}, c.values);
}

Clip tensor_to_clip(const Tensor& t, std::size_t frames, std::size_t h, std::size_t w, bool clamp) {
    if (t.shape.size() != 2 || t.shape[0] != frames * h * w)
        throw std::runtime_error("tensor_to_clip: shape mismatch " + shape_str(t.shape));
    Clip c;
    c.frames = frames;
    c.height = h;
    c.width = w;
    c.channels = t.shape[1];
    c.values = t.data;
    if (clamp)
        for (auto& v : c.values) v = clamp01(v);
    return c;
}

PairStream::Pair PairStream::next(std::size_t iter) {
    const std::size_t frames = frames_at(iter);
    const auto& aspect = cfg_.aspects[rng_.next_u64() % cfg_.aspects.size()];
    const uint64_t clip_seed = rng_.next_u64();
    const uint64_t deg_seed = rng_.next_u64();
    Pair p;
    p.hq = synth_video(clip_seed, frames, aspect.first, aspect.second);
    p.lq = degrade(p.hq, cfg_.degradation, deg_seed);
    return p;
}

} // namespace windvr::data
