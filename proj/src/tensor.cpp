#include "windvr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "windvr/kernels.hpp"

namespace windvr {

std::size_t numel(const Shape& s) {
    std::size_t n = 1;
    for (auto e : s) n *= e;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

namespace {

thread_local bool g_grad_enabled = true;

void check_finite(const std::vector<double>& d, const char* op) {
    bool ok = true;
#pragma omp parallel for schedule(static) reduction(&& : ok)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(d.size()); ++i)
        ok = ok && std::isfinite(d[i]);
    if (!ok)
        throw std::runtime_error(std::string("non-finite value produced by op '") + op + "'");
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
    throw std::runtime_error(std::string("shape mismatch in op '") + op + "': " +
                             shape_str(a) + " vs " + shape_str(b));
}

// Leading-axis broadcast: returns true if small == trailing suffix of big.
bool is_suffix(const Shape& big, const Shape& small) {
    if (small.size() > big.size()) return false;
    return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

Tensor finish(const char* op, Shape shape, std::vector<double> data,
              std::initializer_list<const Tensor*> inputs,
              std::function<void(const std::vector<double>&)> back) {
    check_finite(data, op);
    Tensor out(std::move(shape), std::move(data));
    bool any = false;
    for (auto* t : inputs) any = any || t->tracked();
    if (g_grad_enabled && any) {
        std::vector<std::shared_ptr<Node>> ps;
        for (auto* t : inputs) ps.push_back(t->node);
        auto n = std::make_shared<Node>();
        n->op = op;
        n->shape = out.shape;
        n->size = out.size();
        for (auto& p : ps)
            if (p) n->parents.push_back(p);
        n->backprop = std::move(back);
        out.node = std::move(n);
    }
    return out;
}

// dA += up * B^T   (up: m x n, B: k x n, dA: m x k)
void matmul_nt_acc(const double* up, const double* b, double* da,
                   std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
        const double* ui = up + static_cast<std::size_t>(i) * n;
        double* di = da + static_cast<std::size_t>(i) * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* bp = b + p * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += ui[j] * bp[j];
            di[p] += acc;
        }
    }
}

// dB += A^T * up   (A: m x k, up: m x n, dB: k x n)
void matmul_tn_acc(const double* a, const double* up, double* db,
                   std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(k); ++p) {
        double* dp = db + static_cast<std::size_t>(p) * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = a[i * k + static_cast<std::size_t>(p)];
            const double* ui = up + i * n;
            for (std::size_t j = 0; j < n; ++j) dp[j] += av * ui[j];
        }
    }
}

Tensor unary(const Tensor& x, const char* op,
             std::function<double(double)> f,
             // dfdx given (x_i, y_i)
             std::function<double(double, double)> df) {
    std::vector<double> d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = f(x.data[i]);
    auto xn = x.node;
    auto xdata = std::make_shared<std::vector<double>>();
    auto ydata = std::make_shared<std::vector<double>>();
    if (g_grad_enabled && xn) {
        *xdata = x.data;
        *ydata = d;
    }
    return finish(op, x.shape, std::move(d), {&x},
                  [xn, xdata, ydata, df](const std::vector<double>& up) {
                      if (!xn) return;
                      if (xn->grad.empty()) xn->grad.assign(xn->size, 0.0);
                      for (std::size_t i = 0; i < up.size(); ++i)
                          xn->grad[i] += up[i] * df((*xdata)[i], (*ydata)[i]);
                  });
}

} // namespace

void Node::accumulate(const double* g, std::size_t n) {
    if (grad.empty()) grad.assign(size, 0.0);
    for (std::size_t i = 0; i < n; ++i) grad[i] += g[i];
}

Tensor::Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (numel(shape) != data.size())
        throw std::runtime_error("tensor: shape " + shape_str(shape) + " does not match data size " +
                                 std::to_string(data.size()));
}

double Tensor::item() const {
    if (size() != 1) throw std::runtime_error("item(): tensor is not scalar, shape " + shape_str(shape));
    return data[0];
}

Tensor Tensor::leaf(Shape s, std::vector<double> d) {
    check_finite(d, "leaf");
    Tensor t(std::move(s), std::move(d));
    auto n = std::make_shared<Node>();
    n->leaf = true;
    n->shape = t.shape;
    n->size = t.size();
    t.node = std::move(n);
    return t;
}

Tensor Tensor::zeros(Shape s) {
    std::size_t n = numel(s);
    return Tensor(std::move(s), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(Shape s, double v) {
    std::size_t n = numel(s);
    return Tensor(std::move(s), std::vector<double>(n, v));
}

Tensor Tensor::randn(Shape s, Rng& rng, double scale) {
    std::size_t n = numel(s);
    std::vector<double> d(n);
    for (auto& v : d) v = rng.normal() * scale;
    return Tensor(std::move(s), std::move(d));
}

NoGrad::NoGrad() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGrad::~NoGrad() { g_grad_enabled = prev_; }
bool grad_enabled() { return g_grad_enabled; }

// ---- elementwise binaries ---------------------------------------------------

namespace {

Tensor binary(const Tensor& a, const Tensor& b, const char* op,
              std::function<double(double, double)> f,
              std::function<double(double, double)> dfa,
              std::function<double(double, double)> dfb) {
    const Tensor* big = &a;
    const Tensor* small = &b;
    bool b_is_small = true;
    if (a.shape != b.shape) {
        if (is_suffix(a.shape, b.shape)) {
            // b broadcasts
        } else if (is_suffix(b.shape, a.shape)) {
            big = &b;
            small = &a;
            b_is_small = false;
        } else {
            shape_error(op, a.shape, b.shape);
        }
    }
    const std::size_t nb = small->size();
    std::vector<double> d(big->size());
    {
        const double* pa = a.data.data();
        const double* pb = b.data.data();
        const std::size_t na = a.size(), nbs = b.size();
        for (std::size_t i = 0; i < d.size(); ++i)
            d[i] = f(pa[na == d.size() ? i : i % na], pb[nbs == d.size() ? i : i % nbs]);
    }
    auto an = a.node;
    auto bn = b.node;
    auto saved_a = std::make_shared<std::vector<double>>();
    auto saved_b = std::make_shared<std::vector<double>>();
    if (g_grad_enabled && (an || bn)) {
        *saved_a = a.data;
        *saved_b = b.data;
    }
    (void)b_is_small;
    (void)nb;
    std::size_t an_size = a.size(), bn_size = b.size();
    return finish(op, big->shape, std::move(d), {&a, &b},
                  [an, bn, saved_a, saved_b, dfa, dfb, an_size, bn_size](const std::vector<double>& up) {
                      if (an) {
                          if (an->grad.empty()) an->grad.assign(an->size, 0.0);
                          for (std::size_t i = 0; i < up.size(); ++i) {
                              double av = (*saved_a)[an_size == up.size() ? i : i % an_size];
                              double bv = (*saved_b)[bn_size == up.size() ? i : i % bn_size];
                              an->grad[an_size == up.size() ? i : i % an_size] += up[i] * dfa(av, bv);
                          }
                      }
                      if (bn) {
                          if (bn->grad.empty()) bn->grad.assign(bn->size, 0.0);
                          for (std::size_t i = 0; i < up.size(); ++i) {
                              double av = (*saved_a)[an_size == up.size() ? i : i % an_size];
                              double bv = (*saved_b)[bn_size == up.size() ? i : i % bn_size];
                              bn->grad[bn_size == up.size() ? i : i % bn_size] += up[i] * dfb(av, bv);
                          }
                      }
                  });
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary(a, b, "add",
                  [](double x, double y) { return x + y; },
                  [](double, double) { return 1.0; },
                  [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary(a, b, "sub",
                  [](double x, double y) { return x - y; },
                  [](double, double) { return 1.0; },
                  [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary(a, b, "mul",
                  [](double x, double y) { return x * y; },
                  [](double, double y) { return y; },
                  [](double x, double) { return x; });
}

Tensor affine(const Tensor& x, double scale, double shift) {
    std::vector<double> d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = scale * x.data[i] + shift;
    auto xn = x.node;
    return finish("affine", x.shape, std::move(d), {&x},
                  [xn, scale](const std::vector<double>& up) {
                      if (!xn) return;
                      if (xn->grad.empty()) xn->grad.assign(xn->size, 0.0);
                      for (std::size_t i = 0; i < up.size(); ++i) xn->grad[i] += scale * up[i];
                  });
}

Tensor neg(const Tensor& x) { return affine(x, -1.0); }

// ---- matmul -----------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.shape.size() < 2 || b.shape.size() < 2) shape_error("matmul", a.shape, b.shape);
    const std::size_t m = a.shape[a.shape.size() - 2];
    const std::size_t k = a.shape[a.shape.size() - 1];
    const std::size_t kb = b.shape[b.shape.size() - 2];
    const std::size_t n = b.shape[b.shape.size() - 1];
    if (k != kb) shape_error("matmul", a.shape, b.shape);

    Shape abatch(a.shape.begin(), a.shape.end() - 2);
    Shape bbatch(b.shape.begin(), b.shape.end() - 2);
    Shape obatch;
    if (abatch == bbatch) obatch = abatch;
    else if (abatch.empty()) obatch = bbatch;
    else if (bbatch.empty()) obatch = abatch;
    else shape_error("matmul", a.shape, b.shape);

    const std::size_t nbatch = numel(obatch);
    const bool a_shared = abatch.empty() && !obatch.empty();
    const bool b_shared = bbatch.empty() && !obatch.empty();

    Shape oshape = obatch;
    oshape.push_back(m);
    oshape.push_back(n);
    std::vector<double> d(numel(oshape));
    for (std::size_t bi = 0; bi < nbatch; ++bi) {
        kernels::matmul(a.data.data() + (a_shared ? 0 : bi * m * k),
                        b.data.data() + (b_shared ? 0 : bi * k * n),
                        d.data() + bi * m * n, m, k, n);
    }

    auto an = a.node;
    auto bn = b.node;
    auto sa = std::make_shared<std::vector<double>>();
    auto sb = std::make_shared<std::vector<double>>();
    if (g_grad_enabled && (an || bn)) {
        *sa = a.data;
        *sb = b.data;
    }
    return finish("matmul", std::move(oshape), std::move(d), {&a, &b},
                  [an, bn, sa, sb, m, k, n, nbatch, a_shared, b_shared](const std::vector<double>& up) {
                      if (an) {
                          if (an->grad.empty()) an->grad.assign(an->size, 0.0);
                          for (std::size_t bi = 0; bi < nbatch; ++bi)
                              matmul_nt_acc(up.data() + bi * m * n,
                                            sb->data() + (b_shared ? 0 : bi * k * n),
                                            an->grad.data() + (a_shared ? 0 : bi * m * k), m, k, n);
                      }
                      if (bn) {
                          if (bn->grad.empty()) bn->grad.assign(bn->size, 0.0);
                          for (std::size_t bi = 0; bi < nbatch; ++bi)
                              matmul_tn_acc(sa->data() + (a_shared ? 0 : bi * m * k),
                                            up.data() + bi * m * n,
                                            bn->grad.data() + (b_shared ? 0 : bi * k * n), m, k, n);
                      }
                  });
}

// ---- shape ops --------------------------------------------------------------

Tensor reshape(const Tensor& x, Shape s) {
    if (numel(s) != x.size()) shape_error("reshape", x.shape, s);
    auto xn = x.node;
    std::vector<double> d = x.data;
    return finish("reshape", std::move(s), std::move(d), {&x},
                  [xn](const std::vector<double>& up) {
                      if (xn) xn->accumulate(up.data(), up.size());
                  });
}

namespace {

std::vector<std::size_t> strides_of(const Shape& s) {
    std::vector<std::size_t> st(s.size(), 1);
    for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
    return st;
}

void permute2(const std::vector<double>& in, std::vector<double>& out,
              const Shape& ishape, std::size_t a0, std::size_t a1) {
    Shape oshape = ishape;
    std::swap(oshape[a0], oshape[a1]);
    auto ist = strides_of(ishape);
    auto ost = strides_of(oshape);
    const std::size_t rank = ishape.size();
    std::vector<std::size_t> idx(rank, 0);
    for (std::size_t lin = 0; lin < in.size(); ++lin) {
        // idx currently holds the output coordinate
        std::size_t src = 0;
        for (std::size_t d = 0; d < rank; ++d) {
            std::size_t sd = d;
            if (d == a0) sd = a1;
            else if (d == a1) sd = a0;
            src += idx[d] * ist[sd];
        }
        out[lin] = in[src];
        for (std::size_t d = rank; d-- > 0;) {
            if (++idx[d] < oshape[d]) break;
            idx[d] = 0;
        }
        (void)ost;
    }
}

} // namespace

Tensor transpose(const Tensor& x, std::size_t axis0, std::size_t axis1) {
    if (axis0 >= x.shape.size() || axis1 >= x.shape.size())
        throw std::runtime_error("transpose: axis out of range for shape " + shape_str(x.shape));
    Shape oshape = x.shape;
    std::swap(oshape[axis0], oshape[axis1]);
    std::vector<double> d(x.size());
    permute2(x.data, d, x.shape, axis0, axis1);
    auto xn = x.node;
    Shape ishape = x.shape;
    return finish("transpose", std::move(oshape), std::move(d), {&x},
                  [xn, ishape, axis0, axis1](const std::vector<double>& up) {
                      if (!xn) return;
                      Shape oshape = ishape;
                      std::swap(oshape[axis0], oshape[axis1]);
                      std::vector<double> g(up.size());
                      permute2(up, g, oshape, axis0, axis1);
                      xn->accumulate(g.data(), g.size());
                  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw std::runtime_error("concat: empty input list");
    const Shape& ref = parts[0].shape;
    if (axis >= ref.size()) throw std::runtime_error("concat: axis out of range");
    Shape oshape = ref;
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.shape.size() != ref.size()) shape_error("concat", ref, p.shape);
        for (std::size_t d = 0; d < ref.size(); ++d)
            if (d != axis && p.shape[d] != ref[d]) shape_error("concat", ref, p.shape);
        total += p.shape[axis];
    }
    oshape[axis] = total;

    std::size_t outer = 1, inner = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= ref[d];
    for (std::size_t d = axis + 1; d < ref.size(); ++d) inner *= ref[d];

    std::vector<double> d(numel(oshape));
    std::size_t off = 0;
    for (const auto& p : parts) {
        const std::size_t blk = p.shape[axis] * inner;
        for (std::size_t o = 0; o < outer; ++o)
            std::memcpy(d.data() + o * total * inner + off, p.data.data() + o * blk,
                        blk * sizeof(double));
        off += blk;
    }

    std::vector<std::shared_ptr<Node>> nodes;
    std::vector<std::size_t> blks;
    bool any = false;
    for (const auto& p : parts) {
        nodes.push_back(p.node);
        blks.push_back(p.shape[axis] * inner);
        any = any || p.tracked();
    }
    check_finite(d, "concat");
    Tensor out(std::move(oshape), std::move(d));
    if (g_grad_enabled && any) {
        auto n = std::make_shared<Node>();
        n->op = "concat";
        n->shape = out.shape;
        n->size = out.size();
        for (auto& p : nodes)
            if (p) n->parents.push_back(p);
        std::size_t tot_inner = total * inner;
        n->backprop = [nodes, blks, outer, tot_inner](const std::vector<double>& up) {
            std::size_t off = 0;
            for (std::size_t pi = 0; pi < nodes.size(); ++pi) {
                const std::size_t blk = blks[pi];
                if (nodes[pi]) {
                    auto& nd = *nodes[pi];
                    if (nd.grad.empty()) nd.grad.assign(nd.size, 0.0);
                    for (std::size_t o = 0; o < outer; ++o)
                        for (std::size_t i = 0; i < blk; ++i)
                            nd.grad[o * blk + i] += up[o * tot_inner + off + i];
                }
                off += blk;
            }
        };
        out.node = std::move(n);
    }
    return out;
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t len) {
    if (axis >= x.shape.size() || start + len > x.shape[axis])
        throw std::runtime_error("slice: out of range on shape " + shape_str(x.shape));
    Shape oshape = x.shape;
    oshape[axis] = len;
    std::size_t outer = 1, inner = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= x.shape[d];
    for (std::size_t d = axis + 1; d < x.shape.size(); ++d) inner *= x.shape[d];
    const std::size_t in_blk = x.shape[axis] * inner;
    const std::size_t out_blk = len * inner;
    std::vector<double> d(numel(oshape));
    for (std::size_t o = 0; o < outer; ++o)
        std::memcpy(d.data() + o * out_blk, x.data.data() + o * in_blk + start * inner,
                    out_blk * sizeof(double));
    auto xn = x.node;
    return finish("slice", std::move(oshape), std::move(d), {&x},
                  [xn, outer, inner, in_blk, out_blk, start](const std::vector<double>& up) {
                      if (!xn) return;
                      if (xn->grad.empty()) xn->grad.assign(xn->size, 0.0);
                      for (std::size_t o = 0; o < outer; ++o)
                          for (std::size_t i = 0; i < out_blk; ++i)
                              xn->grad[o * in_blk + start * inner + i] += up[o * out_blk + i];
                  });
}

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx) {
    if (x.shape.empty()) throw std::runtime_error("gather_rows: scalar input");
    const std::size_t rows = x.shape[0];
    const std::size_t rest = x.size() / rows;
    for (auto i : idx)
        if (i >= rows) throw std::runtime_error("gather_rows: index out of range");
    Shape oshape = x.shape;
    oshape[0] = idx.size();
    std::vector<double> d(idx.size() * rest);
    for (std::size_t r = 0; r < idx.size(); ++r)
        std::memcpy(d.data() + r * rest, x.data.data() + idx[r] * rest, rest * sizeof(double));
    auto xn = x.node;
    auto idx_copy = std::make_shared<std::vector<std::size_t>>(idx);
    return finish("gather_rows", std::move(oshape), std::move(d), {&x},
                  [xn, idx_copy, rest](const std::vector<double>& up) {
                      if (!xn) return;
                      if (xn->grad.empty()) xn->grad.assign(xn->size, 0.0);
                      for (std::size_t r = 0; r < idx_copy->size(); ++r) {
                          double* g = xn->grad.data() + (*idx_copy)[r] * rest;
                          const double* u = up.data() + r * rest;
                          for (std::size_t i = 0; i < rest; ++i) g[i] += u[i];
                      }
                  });
}

// ---- softmax / reductions / norms ------------------------------------------

Tensor softmax_lastdim(const Tensor& x) {
    if (x.shape.empty()) throw std::runtime_error("softmax: scalar input");
    const std::size_t cols = x.shape.back();
    const std::size_t rows = x.size() / cols;
    std::vector<double> d(x.size());
    kernels::softmax_rows(x.data.data(), d.data(), rows, cols);
    auto xn = x.node;
    auto y = std::make_shared<std::vector<double>>();
    if (g_grad_enabled && xn) *y = d;
    return finish("softmax", x.shape, std::move(d), {&x},
                  [xn, y, rows, cols](const std::vector<double>& up) {
                      if (!xn) return;
                      if (xn->grad.empty()) xn->grad.assign(xn->size, 0.0);
                      for (std::size_t r = 0; r < rows; ++r) {
                          const double* yr = y->data() + r * cols;
                          const double* ur = up.data() + r * cols;
                          double dot = 0.0;
                          for (std::size_t j = 0; j < cols; ++j) dot += ur[j] * yr[j];
                          double* g = xn->grad.data() + r * cols;
                          for (std::size_t j = 0; j < cols; ++j) g[j] += yr[j] * (ur[j] - dot);
                      }
                  });
}

Tensor sum_all(const Tensor& x) {
    double s = 0.0;
    for (double v : x.data) s += v;
    auto xn = x.node;
    return finish("sum", Shape{1}, std::vector<double>{s}, {&x},
                  [xn](const std::vector<double>& up) {
                      if (!xn) return;
                      if (xn->grad.empty()) xn->grad.assign(xn->size, 0.0);
                      for (auto& g : xn->grad) g += up[0];
                  });
}

Tensor mean_all(const Tensor& x) {
    double s = 0.0;
    for (double v : x.data) s += v;
    const double invn = 1.0 / static_cast<double>(x.size());
    auto xn = x.node;
    return finish("mean", Shape{1}, std::vector<double>{s * invn}, {&x},
                  [xn, invn](const std::vector<double>& up) {
                      if (!xn) return;
                      if (xn->grad.empty()) xn->grad.assign(xn->size, 0.0);
                      const double g = up[0] * invn;
                      for (auto& gv : xn->grad) gv += g;
                  });
}

Tensor layer_norm(const Tensor& x, double eps) {
    if (x.shape.empty()) throw std::runtime_error("layer_norm: scalar input");
    const std::size_t cols = x.shape.back();
    const std::size_t rows = x.size() / cols;
    std::vector<double> d(x.size());
    auto y = std::make_shared<std::vector<double>>();
    auto rstd = std::make_shared<std::vector<double>>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x.data.data() + r * cols;
        double mu = 0.0;
        for (std::size_t j = 0; j < cols; ++j) mu += xr[j];
        mu /= static_cast<double>(cols);
        double var = 0.0;
        for (std::size_t j = 0; j < cols; ++j) var += (xr[j] - mu) * (xr[j] - mu);
        var /= static_cast<double>(cols);
        const double rs = 1.0 / std::sqrt(var + eps);
        (*rstd)[r] = rs;
        double* dr = d.data() + r * cols;
        for (std::size_t j = 0; j < cols; ++j) dr[j] = (xr[j] - mu) * rs;
    }
    auto xn = x.node;
    if (g_grad_enabled && xn) *y = d;
    return finish("layer_norm", x.shape, std::move(d), {&x},
                  [xn, y, rstd, rows, cols](const std::vector<double>& up) {
                      if (!xn) return;
                      if (xn->grad.empty()) xn->grad.assign(xn->size, 0.0);
                      const double invc = 1.0 / static_cast<double>(cols);
                      for (std::size_t r = 0; r < rows; ++r) {
                          const double* yr = y->data() + r * cols;
                          const double* ur = up.data() + r * cols;
                          double mg = 0.0, mgy = 0.0;
                          for (std::size_t j = 0; j < cols; ++j) {
                              mg += ur[j];
                              mgy += ur[j] * yr[j];
                          }
                          mg *= invc;
                          mgy *= invc;
                          double* g = xn->grad.data() + r * cols;
                          const double rs = (*rstd)[r];
                          for (std::size_t j = 0; j < cols; ++j)
                              g[j] += rs * (ur[j] - mg - yr[j] * mgy);
                      }
                  });
}

// ---- pointwise nonlinearities ----------------------------------------------

Tensor silu(const Tensor& x) {
    return unary(x, "silu",
                 [](double v) { return v / (1.0 + std::exp(-v)); },
                 [](double v, double) {
                     const double s = 1.0 / (1.0 + std::exp(-v));
                     return s * (1.0 + v * (1.0 - s));
                 });
}

Tensor gelu(const Tensor& x) {
    constexpr double c = 0.7978845608028653558798921198687; // sqrt(2/pi)
    return unary(x, "gelu",
                 [](double v) {
                     const double t = std::tanh(c * (v + 0.044715 * v * v * v));
                     return 0.5 * v * (1.0 + t);
                 },
                 [](double v, double) {
                     const double u = c * (v + 0.044715 * v * v * v);
                     const double t = std::tanh(u);
                     const double du = c * (1.0 + 3.0 * 0.044715 * v * v);
                     return 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du;
                 });
}

Tensor sigmoid(const Tensor& x) {
    return unary(x, "sigmoid",
                 [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
                 [](double, double y) { return y * (1.0 - y); });
}

Tensor softplus(const Tensor& x) {
    return unary(x, "softplus",
                 [](double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
                 [](double v, double) { return 1.0 / (1.0 + std::exp(-v)); });
}

Tensor abs_t(const Tensor& x) {
    return unary(x, "abs",
                 [](double v) { return std::fabs(v); },
                 [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor square(const Tensor& x) {
    return unary(x, "square",
                 [](double v) { return v * v; },
                 [](double v, double) { return 2.0 * v; });
}

Tensor sqrt_t(const Tensor& x) {
    return unary(x, "sqrt",
                 [](double v) { return std::sqrt(v); },
                 [](double, double y) { return 0.5 / y; });
}

Tensor exp_t(const Tensor& x) {
    return unary(x, "exp",
                 [](double v) { return std::exp(v); },
                 [](double, double y) { return y; });
}

// ---- backward ---------------------------------------------------------------

GradMap backward(const Tensor& loss) {
    if (loss.size() != 1)
        throw std::runtime_error("backward: loss must be scalar, got shape " + shape_str(loss.shape));
    if (!loss.node) throw std::runtime_error("backward: loss is not on the tape");

    // Reverse topological order via iterative post-order DFS.
    std::vector<Node*> order;
    std::unordered_map<Node*, int> state; // 0 unseen, 1 open, 2 done
    std::vector<Node*> stack{loss.node.get()};
    while (!stack.empty()) {
        Node* n = stack.back();
        int& st = state[n];
        if (st == 0) {
            st = 1;
            for (auto& p : n->parents)
                if (state[p.get()] == 0) stack.push_back(p.get());
        } else {
            stack.pop_back();
            if (st == 1) {
                st = 2;
                order.push_back(n);
            }
        }
    }

    loss.node->grad.assign(1, 1.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop && !n->grad.empty()) n->backprop(n->grad);
    }

    GradMap out;
    for (Node* n : order) {
        if (n->leaf) {
            std::vector<double> g = n->grad.empty() ? std::vector<double>(n->size, 0.0) : n->grad;
            out.emplace(n, Tensor(n->shape, std::move(g)));
        }
    }
    return out;
}

// ---- serialization ----------------------------------------------------------

void save_tensor(const Tensor& t, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_tensor: cannot open " + path);
    f.write("WVT1", 4);
    uint64_t rank = t.shape.size();
    f.write(reinterpret_cast<const char*>(&rank), 8);
    for (auto e : t.shape) {
        uint64_t v = e;
        f.write(reinterpret_cast<const char*>(&v), 8);
    }
    f.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!f) throw std::runtime_error("save_tensor: write failed for " + path);
}

Tensor load_tensor(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_tensor: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "WVT1", 4) != 0)
        throw std::runtime_error("load_tensor: bad magic in " + path);
    uint64_t rank = 0;
    f.read(reinterpret_cast<char*>(&rank), 8);
    Shape s(rank);
    for (auto& e : s) {
        uint64_t v = 0;
        f.read(reinterpret_cast<char*>(&v), 8);
        e = v;
    }
    std::vector<double> d(numel(s));
    f.read(reinterpret_cast<char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(double)));
    if (!f) throw std::runtime_error("load_tensor: truncated file " + path);
    return Tensor(std::move(s), std::move(d));
}

} // namespace windvr
