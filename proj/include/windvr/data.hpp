#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "windvr/rng.hpp"
#include "windvr/tensor.hpp"

namespace windvr::data {

// A video clip with values in [0,1]; images are 1-frame clips. Layout is
// frame-major [frame][row][col][channel].
struct Clip {
    std::size_t frames = 0, height = 0, width = 0, channels = 3;
    std::vector<double> values;

    std::size_t size() const { return frames * height * width * channels; }
    double& at(std::size_t f, std::size_t y, std::size_t x, std::size_t c) {
        return values[((f * height + y) * width + x) * channels + c];
    }
    double at(std::size_t f, std::size_t y, std::size_t x, std::size_t c) const {
        return values[((f * height + y) * width + x) * channels + c];
    }
};

struct DegradationParams {
    double blur_sigma_min = 0.4, blur_sigma_max = 1.6;
    std::size_t factor = 4;
    double noise_sigma_min = 0.0, noise_sigma_max = 0.04;
    // 0 disables quantization (the compression stand-in).
    std::size_t quant_levels_min = 24, quant_levels_max = 64;

    static DegradationParams none() {
        DegradationParams p;
        p.blur_sigma_min = p.blur_sigma_max = 0.0;
        p.noise_sigma_min = p.noise_sigma_max = 0.0;
        p.quant_levels_min = p.quant_levels_max = 0;
        return p;
    }
};

// Deterministic procedural clip: gradient background, moving shapes and
// band-limited texture with temporally coherent motion.
Clip synth_video(uint64_t seed, std::size_t frames, std::size_t h, std::size_t w);

// Ordered degradation pipeline at 1/factor resolution:
// Gaussian blur -> area downsample -> additive Gaussian noise -> uniform
// quantization -> clamp to [0,1].
Clip degrade(const Clip& hq, const DegradationParams& params, uint64_t seed);

// Area downsample alone (the zero-strength degradation).
Clip area_downsample(const Clip& hq, std::size_t factor);

// Nearest-neighbour upsample, used to lift the LQ clip onto the HQ grid for
// conditioning.
Clip upsample_nearest(const Clip& lq, std::size_t factor);

// Clip file format: magic "WVC1", frames/h/w/channels u64 LE, f32 payload.
void save_clip(const Clip& c, const std::string& path);
Clip load_clip(const std::string& path);

Tensor clip_to_tensor(const Clip& c); // [frames*h*w, channels]
Clip tensor_to_clip(const Tensor& t, std::size_t frames, std::size_t h, std::size_t w,
                    bool clamp01 = true);

struct StreamConfig {
    // HQ aspect set; all entries should share a common token area so window
    // sizes vary while cost stays constant.
    std::vector<std::pair<std::size_t, std::size_t>> aspects{{16, 16}, {8, 32}, {32, 8}};
    std::vector<std::pair<std::size_t, std::size_t>> curriculum{{0, 1}}; // (start_iter, frames)
    DegradationParams degradation;
};

// Infinite seeded stream of (LQ, HQ) pairs with curriculum-controlled frame
// counts. Deterministic: same seed, same sequence.
class PairStream {
public:
    PairStream(StreamConfig cfg, uint64_t seed) : cfg_(std::move(cfg)), rng_(seed) {}

    std::size_t frames_at(std::size_t iter) const {
        std::size_t f = 1;
        for (auto [start, frames] : cfg_.curriculum)
            if (iter >= start) f = frames;
        return f;
    }

    struct Pair {
        Clip lq, hq;
    };
    Pair next(std::size_t iter);

private:
    StreamConfig cfg_;
    Rng rng_;
};

} // namespace windvr::data
