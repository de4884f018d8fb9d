#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "windvr/rng.hpp"

namespace windvr {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& s);
std::string shape_str(const Shape& s);

// One record on the gradient tape. Nodes form a DAG through `parents`;
// `backprop` receives the upstream gradient and accumulates into the parents'
// grad buffers (fixed left-to-right order, so backward is bit-deterministic).
struct Node {
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(const std::vector<double>&)> backprop;
    std::vector<double> grad;
    Shape shape;
    std::size_t size = 0;
    bool leaf = false;
    const char* op = "leaf";

    void accumulate(const double* g, std::size_t n);
    void zero_grad() { grad.clear(); }
};

// Dense row-major tensor of doubles. Immutable by convention after creation;
// ops return fresh tensors. `node` is set when the tensor participates in
// gradient tracking.
struct Tensor {
    Shape shape;
    std::vector<double> data;
    std::shared_ptr<Node> node;

    Tensor() = default;
    Tensor(Shape s, std::vector<double> d);

    std::size_t size() const { return data.size(); }
    double item() const; // requires size()==1
    bool tracked() const { return node != nullptr; }

    // Creates a leaf participating in autodiff.
    static Tensor leaf(Shape s, std::vector<double> d);
    static Tensor zeros(Shape s);
    static Tensor full(Shape s, double v);
    static Tensor randn(Shape s, Rng& rng, double scale = 1.0);

    Tensor detached() const { return Tensor(shape, data); }
};

// Scoped gradient-tracking switch (thread-local). Tracking is ON by default;
// inference paths wrap themselves in NoGrad to skip tape construction.
struct NoGrad {
    NoGrad();
    ~NoGrad();
    NoGrad(const NoGrad&) = delete;

private:
    bool prev_;
};
bool grad_enabled();

// ---- op suite ---------------------------------------------------------------
// Elementwise binaries support leading-axis broadcast: shapes must be equal, or
// the smaller shape must equal a trailing suffix of the larger one.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor affine(const Tensor& x, double scale, double shift = 0.0); // scale*x+shift
inline Tensor smul(const Tensor& x, double s) { return affine(x, s); }
Tensor neg(const Tensor& x);

// Batched matmul: [...,m,k] x [...,k,n] with equal batch dims, or either side
// rank-2 (broadcast across the other's batch dims).
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor reshape(const Tensor& x, Shape s);
Tensor transpose(const Tensor& x, std::size_t axis0, std::size_t axis1);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t len);
// x is [N, rest...]; picks rows by index map (duplicates allowed).
Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx);

Tensor softmax_lastdim(const Tensor& x);
Tensor sum_all(const Tensor& x);   // -> shape {1}
Tensor mean_all(const Tensor& x);  // -> shape {1}
Tensor layer_norm(const Tensor& x, double eps = 1e-6); // over last axis
Tensor silu(const Tensor& x);
Tensor gelu(const Tensor& x); // tanh approximation
Tensor sigmoid(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor abs_t(const Tensor& x);
Tensor square(const Tensor& x);
Tensor sqrt_t(const Tensor& x);
Tensor exp_t(const Tensor& x);

// ---- backward ---------------------------------------------------------------

// Runs reverse-mode accumulation from a scalar loss. Gradients land in the
// leaf nodes' grad buffers; the returned map exposes them keyed by node.
using GradMap = std::unordered_map<const Node*, Tensor>;
GradMap backward(const Tensor& loss);

// ---- serialization ----------------------------------------------------------
// Flat binary format: magic "WVT1", rank u64 LE, extents u64 LE, f64 LE payload.

void save_tensor(const Tensor& t, const std::string& path);
Tensor load_tensor(const std::string& path);

} // namespace windvr
