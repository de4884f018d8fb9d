#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "windvr/rope.hpp"
#include "windvr/tensor.hpp"
#include "windvr/window.hpp"

namespace windvr {

struct ModelConfig {
    std::size_t model_dim = 64;
    std::size_t num_heads = 4;
    std::size_t mlp_ratio = 4;
    std::size_t num_blocks = 6;
    std::size_t channels = 3;
    std::vector<double> tap_fractions{16.0 / 36.0, 26.0 / 36.0, 36.0 / 36.0};
    win::WindowCounts counts{1, 3, 3};
    double rope_base = 10000.0;

    void validate() const;
    RoPEConfig rope() const { return RoPEConfig::for_head_dim(model_dim / num_heads, rope_base); }
};

// The windowed transformer shared by generator and discriminator. Maps
// (noisy latent, timestep, LQ condition) -> velocity field, exposing the
// residual stream at tap depths for the feature matching loss.
class Backbone {
public:
    ModelConfig cfg;
    std::map<std::string, Tensor> params; // leaf tensors, name-sorted

    static Backbone init(const ModelConfig& cfg, uint64_t seed);

    struct Forward {
        Tensor velocity;           // [tokens, channels]
        std::vector<Tensor> taps;  // residual stream at tap depths, [tokens, model_dim]
    };

    // latent and lq_up are [tokens, channels] over the same grid; tau in [0,1].
    // use_cond selects the learned condition embedding vs the null embedding.
    Forward forward(const Tensor& latent, double tau, const Tensor& lq_up, bool use_cond,
                    const win::GridShape& grid, const win::WindowLayout& layout) const;

    // 1-based block indices at which taps are captured: ceil(frac * num_blocks).
    std::vector<std::size_t> tap_blocks() const;

    std::vector<Tensor*> param_list();
    std::vector<const Tensor*> param_list() const;
    uint64_t checksum() const;
    void zero_grads();

    void save(const std::string& dir, std::size_t step, const std::string& stage) const;
    static Backbone load(const std::string& dir);

private:
    const Tensor& p(const std::string& name) const;
};

// Backbone plus lightweight logit heads (per-tap mean pool + linear, summed).
class Discriminator {
public:
    Backbone net;
    std::map<std::string, Tensor> heads;

    static Discriminator from_backbone(Backbone b, uint64_t seed);

    struct Forward {
        Tensor logit;             // shape {1}
        std::vector<Tensor> taps; // same taps as the backbone
    };
    // Discriminator sees clean-domain samples; timestep embedding fixed at 0.
    Forward forward(const Tensor& x, const Tensor& lq_up, const win::GridShape& grid,
                    const win::WindowLayout& layout) const;

    std::vector<Tensor*> param_list();
    uint64_t checksum() const;
    void zero_grads();

    void save(const std::string& dir, std::size_t step) const;
    static Discriminator load(const std::string& dir);
};

uint64_t bytes_checksum(const std::vector<const Tensor*>& params);

} // namespace windvr
