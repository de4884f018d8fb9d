#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

#include "windvr/tensor.hpp"

namespace windvr {

struct GradCheckReport {
    double max_rel_err = 0.0;
    bool pass = false;
};

// Compares reverse-mode gradients of a scalar-valued f against central
// differences, element by element. Relative error uses an absolute-error
// fallback of 1e-8 near zero. f must be deterministic.
inline GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& f,
                                  const Tensor& x0, double step = 1e-4, double tol = 1e-4) {
    if (step < 1e-6 || step > 1e-3)
        throw std::runtime_error("grad_check: step must be in [1e-6, 1e-3]");

    Tensor x = Tensor::leaf(x0.shape, x0.data);
    Tensor loss = f(x);
    if (loss.size() != 1) throw std::runtime_error("grad_check: f must be scalar-valued");
    const double base = loss.item();
    {
        Tensor again = f(x);
        if (again.item() != base)
            throw std::runtime_error("grad_check: f is not deterministic");
    }
    GradMap grads = backward(loss);
    auto it = grads.find(x.node.get());
    if (it == grads.end()) throw std::runtime_error("grad_check: f does not depend on x");
    const Tensor& analytic = it->second;

    GradCheckReport rep;
    rep.pass = true;
    NoGrad ng;
    for (std::size_t i = 0; i < x0.size(); ++i) {
        Tensor xp = x0.detached();
        Tensor xm = x0.detached();
        xp.data[i] += step;
        xm.data[i] -= step;
        const double numeric = (f(xp).item() - f(xm).item()) / (2.0 * step);
        const double a = analytic.data[i];
        const double denom = std::max(std::fabs(a), std::fabs(numeric));
        double err;
        if (denom < 1e-8) {
            err = std::fabs(a - numeric) < 1e-8 ? 0.0 : 1.0;
        } else {
            err = std::fabs(a - numeric) / denom;
        }
        rep.max_rel_err = std::max(rep.max_rel_err, err);
    }
    rep.pass = rep.max_rel_err <= tol;
    return rep;
}

} // namespace windvr
