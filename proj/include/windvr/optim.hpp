#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "windvr/tensor.hpp"

namespace windvr {

// Adam with decoupled weight decay. Parameters are leaf tensors; gradients are
// read from their tape nodes and applied in the caller-supplied order, which
// must stay fixed for reproducibility.
class AdamW {
public:
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;

    explicit AdamW(std::vector<Tensor*> params, double lr_ = 1e-4, double wd = 0.01)
        : lr(lr_), weight_decay(wd), params_(std::move(params)) {
        for (auto* p : params_) {
            if (!p->node || !p->node->leaf)
                throw std::runtime_error("AdamW: parameter is not a tracked leaf");
            m_.emplace_back(p->size(), 0.0);
            v_.emplace_back(p->size(), 0.0);
        }
    }

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
        for (std::size_t pi = 0; pi < params_.size(); ++pi) {
            Tensor& p = *params_[pi];
            const auto& g = p.node->grad;
            if (g.empty()) continue; // no gradient reached this parameter
            auto& m = m_[pi];
            auto& v = v_[pi];
            for (std::size_t i = 0; i < p.size(); ++i) {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                p.data[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * p.data[i]);
            }
        }
    }

    void zero_grad() {
        for (auto* p : params_) p->node->zero_grad();
    }

private:
    std::vector<Tensor*> params_;
    std::vector<std::vector<double>> m_, v_;
    std::size_t t_ = 0;
};

} // namespace windvr
