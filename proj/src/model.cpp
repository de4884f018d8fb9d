#include "windvr/model.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "windvr/attention.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace windvr {

void ModelConfig::validate() const {
    if (model_dim == 0 || num_heads == 0 || model_dim % num_heads != 0)
        throw std::runtime_error("ModelConfig: model_dim must be divisible by num_heads");
    if (num_blocks == 0 || channels == 0 || mlp_ratio == 0)
        throw std::runtime_error("ModelConfig: zero-sized field");
    for (double f : tap_fractions)
        if (f <= 0.0 || f > 1.0) throw std::runtime_error("ModelConfig: tap fraction outside (0,1]");
    rope().validate();
}

namespace {

json config_to_json(const ModelConfig& c) {
    return json{{"model_dim", c.model_dim},   {"num_heads", c.num_heads},
                {"mlp_ratio", c.mlp_ratio},   {"num_blocks", c.num_blocks},
                {"channels", c.channels},     {"tap_fractions", c.tap_fractions},
                {"counts", {c.counts.n_t, c.counts.n_h, c.counts.n_w}},
                {"rope_base", c.rope_base}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.model_dim = j.at("model_dim");
    c.num_heads = j.at("num_heads");
    c.mlp_ratio = j.at("mlp_ratio");
    c.num_blocks = j.at("num_blocks");
    c.channels = j.at("channels");
    c.tap_fractions = j.at("tap_fractions").get<std::vector<double>>();
    auto cts = j.at("counts");
    c.counts = {cts.at(0), cts.at(1), cts.at(2)};
    c.rope_base = j.at("rope_base");
    c.validate();
    return c;
}

Tensor init_linear(Shape s, Rng& rng, double fan_in) {
    return Tensor::leaf(s, Tensor::randn(s, rng, 1.0 / std::sqrt(fan_in)).data);
}

Tensor time_features(double tau, std::size_t dim) {
    const std::size_t half = dim / 2;
    std::vector<double> d(dim, 0.0);
    const double t = tau * 1000.0;
    for (std::size_t j = 0; j < half; ++j) {
        const double w = std::pow(10000.0, -static_cast<double>(j) / static_cast<double>(half));
        d[j] = std::sin(t * w);
        d[half + j] = std::cos(t * w);
    }
    return Tensor({1, dim}, std::move(d));
}

} // namespace

Backbone Backbone::init(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    Backbone m;
    m.cfg = cfg;
    Rng rng(seed);
    const std::size_t D = cfg.model_dim;
    const std::size_t C = cfg.channels;
    const std::size_t R = cfg.mlp_ratio * D;
    auto& P = m.params;

    P["in.W"] = init_linear({2 * C, D}, rng, static_cast<double>(2 * C));
    P["in.b"] = Tensor::leaf({D}, std::vector<double>(D, 0.0));
    P["time.W1"] = init_linear({D, D}, rng, static_cast<double>(D));
    P["time.b1"] = Tensor::leaf({D}, std::vector<double>(D, 0.0));
    P["time.W2"] = init_linear({D, D}, rng, static_cast<double>(D));
    P["time.b2"] = Tensor::leaf({D}, std::vector<double>(D, 0.0));
    P["cond.emb"] = Tensor::leaf({1, D}, Tensor::randn({1, D}, rng, 0.02).data);
    P["cond.null"] = Tensor::leaf({1, D}, Tensor::randn({1, D}, rng, 0.02).data);

    for (std::size_t i = 0; i < cfg.num_blocks; ++i) {
        const std::string b = "blk" + std::to_string(i) + ".";
        // adaLN modulation zero-initialized: gates are zero, each block starts
        // as the identity map.
        P[b + "mod.W"] = Tensor::leaf({D, 6 * D}, std::vector<double>(D * 6 * D, 0.0));
        P[b + "mod.b"] = Tensor::leaf({6 * D}, std::vector<double>(6 * D, 0.0));
        P[b + "qkv.W"] = init_linear({D, 3 * D}, rng, static_cast<double>(D));
        P[b + "qkv.b"] = Tensor::leaf({3 * D}, std::vector<double>(3 * D, 0.0));
        P[b + "attn_out.W"] = init_linear({D, D}, rng, static_cast<double>(D));
        P[b + "attn_out.b"] = Tensor::leaf({D}, std::vector<double>(D, 0.0));
        P[b + "mlp.W1"] = init_linear({D, R}, rng, static_cast<double>(D));
        P[b + "mlp.b1"] = Tensor::leaf({R}, std::vector<double>(R, 0.0));
        P[b + "mlp.W2"] = init_linear({R, D}, rng, static_cast<double>(R));
        P[b + "mlp.b2"] = Tensor::leaf({D}, std::vector<double>(D, 0.0));
    }

    P["out.W"] = Tensor::leaf({D, C}, std::vector<double>(D * C, 0.0));
    P["out.b"] = Tensor::leaf({C}, std::vector<double>(C, 0.0));
    return m;
}

const Tensor& Backbone::p(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) throw std::runtime_error("Backbone: missing parameter " + name);
    return it->second;
}

std::vector<std::size_t> Backbone::tap_blocks() const {
    std::vector<std::size_t> out;
    for (double f : cfg.tap_fractions) {
        auto idx = static_cast<std::size_t>(std::ceil(f * static_cast<double>(cfg.num_blocks)));
        out.push_back(idx == 0 ? 1 : idx);
    }
    return out;
}

Backbone::Forward Backbone::forward(const Tensor& latent, double tau, const Tensor& lq_up,
                                    bool use_cond, const win::GridShape& grid,
                                    const win::WindowLayout& layout) const {
    const std::size_t D = cfg.model_dim;
    const std::size_t C = cfg.channels;
    const std::size_t H = cfg.num_heads;
    const std::size_t hd = D / H;
    const std::size_t N = grid.volume();
    if (latent.shape != Shape{N, C} || lq_up.shape != Shape{N, C})
        throw std::runtime_error("Backbone::forward: latent/lq shape must be [" + std::to_string(N) +
                                 "," + std::to_string(C) + "], got " + shape_str(latent.shape) + " / " +
                                 shape_str(lq_up.shape));
    const RoPEConfig rope = cfg.rope();

    // Token embedding from channel-concatenated (latent, LQ condition).
    Tensor h = add(matmul(concat({latent, lq_up}, 1), p("in.W")), p("in.b"));

    // Timestep + condition embedding drives adaLN modulation.
    Tensor temb = add(matmul(time_features(tau, D), p("time.W1")), reshape(p("time.b1"), {1, D}));
    temb = add(matmul(silu(temb), p("time.W2")), reshape(p("time.b2"), {1, D}));
    Tensor emb = silu(add(temb, use_cond ? p("cond.emb") : p("cond.null")));

    auto taps_at = tap_blocks();
    Forward out;
    for (std::size_t i = 0; i < cfg.num_blocks; ++i) {
        const std::string b = "blk" + std::to_string(i) + ".";
        Tensor mod = add(matmul(emb, p(b + "mod.W")), reshape(p(b + "mod.b"), {1, 6 * D}));
        auto mslice = [&](std::size_t k) { return reshape(slice(mod, 1, k * D, D), {D}); };
        Tensor sa_shift = mslice(0), sa_scale = mslice(1), sa_gate = mslice(2);
        Tensor ml_shift = mslice(3), ml_scale = mslice(4), ml_gate = mslice(5);

        // Attention branch.
        Tensor u = add(mul(layer_norm(h), affine(sa_scale, 1.0, 1.0)), sa_shift);
        Tensor qkv = add(matmul(u, p(b + "qkv.W")), p(b + "qkv.b"));
        Tensor q = reshape(slice(qkv, 1, 0, D), {N, H, hd});
        Tensor k = reshape(slice(qkv, 1, D, D), {N, H, hd});
        Tensor v = reshape(slice(qkv, 1, 2 * D, D), {N, H, hd});
        Tensor a = reshape(window_attention(q, k, v, layout, rope), {N, D});
        a = add(matmul(a, p(b + "attn_out.W")), p(b + "attn_out.b"));
        h = add(h, mul(a, sa_gate));

        // MLP branch.
        Tensor u2 = add(mul(layer_norm(h), affine(ml_scale, 1.0, 1.0)), ml_shift);
        Tensor m1 = silu(add(matmul(u2, p(b + "mlp.W1")), p(b + "mlp.b1")));
        Tensor m2 = add(matmul(m1, p(b + "mlp.W2")), p(b + "mlp.b2"));
        h = add(h, mul(m2, ml_gate));

        for (std::size_t ti = 0; ti < taps_at.size(); ++ti)
            if (taps_at[ti] == i + 1) out.taps.push_back(h);
    }

    out.velocity = add(matmul(layer_norm(h), p("out.W")), p("out.b"));
    return out;
}

std::vector<Tensor*> Backbone::param_list() {
    std::vector<Tensor*> out;
    for (auto& [k, v] : params) out.push_back(&v);
    return out;
}

std::vector<const Tensor*> Backbone::param_list() const {
    std::vector<const Tensor*> out;
    for (auto& [k, v] : params) out.push_back(&v);
    return out;
}

uint64_t bytes_checksum(const std::vector<const Tensor*>& params) {
    uint64_t h = 1469598103934665603ULL; // FNV-1a
    for (auto* t : params)
        for (double v : t->data) {
            uint64_t bits;
            std::memcpy(&bits, &v, 8);
            for (int i = 0; i < 8; ++i) {
                h ^= (bits >> (8 * i)) & 0xff;
                h *= 1099511628211ULL;
            }
        }
    return h;
}

uint64_t Backbone::checksum() const { return bytes_checksum(param_list()); }

void Backbone::zero_grads() {
    for (auto& [k, v] : params)
        if (v.node) v.node->zero_grad();
}

void Backbone::save(const std::string& dir, std::size_t step, const std::string& stage) const {
    fs::create_directories(dir);
    json manifest{{"config", config_to_json(cfg)}, {"step", step}, {"stage", stage}};
    std::ofstream mf(dir + "/manifest.json");
    mf << manifest.dump(2) << "\n";
    for (const auto& [name, t] : params) save_tensor(t, dir + "/" + name + ".wvt");
}

Backbone Backbone::load(const std::string& dir) {
    std::ifstream mf(dir + "/manifest.json");
    if (!mf) throw std::runtime_error("Backbone::load: missing manifest in " + dir);
    json manifest = json::parse(mf);
    Backbone ref = Backbone::init(config_from_json(manifest.at("config")), 0);
    for (auto& [name, t] : ref.params) {
        Tensor loaded = load_tensor(dir + "/" + name + ".wvt");
        if (loaded.shape != t.shape)
            throw std::runtime_error("Backbone::load: shape mismatch for " + name + " in " + dir);
        t = Tensor::leaf(loaded.shape, std::move(loaded.data));
    }
    return ref;
}

// ---- discriminator ----------------------------------------------------------

Discriminator Discriminator::from_backbone(Backbone b, uint64_t seed) {
    Discriminator d;
    d.net = std::move(b);
    Rng rng(seed);
    const std::size_t D = d.net.cfg.model_dim;
    for (std::size_t k = 0; k < d.net.cfg.tap_fractions.size(); ++k) {
        const std::string h = "head" + std::to_string(k) + ".";
        d.heads[h + "W"] = Tensor::leaf({D, 1}, Tensor::randn({D, 1}, rng, 1.0 / std::sqrt((double)D)).data);
        d.heads[h + "b"] = Tensor::leaf({1}, {0.0});
    }
    return d;
}

Discriminator::Forward Discriminator::forward(const Tensor& x, const Tensor& lq_up,
                                              const win::GridShape& grid,
                                              const win::WindowLayout& layout) const {
    auto bb = net.forward(x, 0.0, lq_up, true, grid, layout);
    const std::size_t N = grid.volume();
    Tensor pool_w({1, N}, std::vector<double>(N, 1.0 / static_cast<double>(N)));
    Tensor logit = Tensor::zeros({1});
    for (std::size_t k = 0; k < bb.taps.size(); ++k) {
        const std::string h = "head" + std::to_string(k) + ".";
        Tensor pooled = matmul(pool_w, bb.taps[k]); // [1, D]
        Tensor lk = add(reshape(matmul(pooled, heads.at(h + "W")), {1}), heads.at(h + "b"));
        logit = add(logit, lk);
    }
    return {std::move(logit), std::move(bb.taps)};
}

std::vector<Tensor*> Discriminator::param_list() {
    auto out = net.param_list();
    for (auto& [k, v] : heads) out.push_back(&v);
    return out;
}

uint64_t Discriminator::checksum() const {
    std::vector<const Tensor*> ps;
    for (const auto& [k, v] : net.params) ps.push_back(&v);
    for (const auto& [k, v] : heads) ps.push_back(&v);
    return bytes_checksum(ps);
}

void Discriminator::zero_grads() {
    net.zero_grads();
    for (auto& [k, v] : heads)
        if (v.node) v.node->zero_grad();
}

void Discriminator::save(const std::string& dir, std::size_t step) const {
    net.save(dir, step, "discriminator");
    for (const auto& [name, t] : heads) save_tensor(t, dir + "/" + name + ".wvt");
}

Discriminator Discriminator::load(const std::string& dir) {
    Discriminator d = from_backbone(Backbone::load(dir), 0);
    for (auto& [name, t] : d.heads) {
        Tensor loaded = load_tensor(dir + "/" + name + ".wvt");
        t = Tensor::leaf(loaded.shape, std::move(loaded.data));
    }
    return d;
}

} // namespace windvr
