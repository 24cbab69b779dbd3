#include "gmarl/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace gmarl {

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Tensor value) {
    nodes_.push_back(Node{std::move(value), {}, nullptr, false});
    return Var(this, nodes_.size() - 1);
}

Var Tape::param(const ParamStore& store, const std::string& name) {
    if (auto it = params_.find(name); it != params_.end()) return Var(this, it->second);
    nodes_.push_back(Node{store.get(name), {}, nullptr, true});
    params_.emplace(name, nodes_.size() - 1);
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
    bool needs = false;
    for (auto i : inputs) needs = needs || nodes_[i].requires_grad;
    nodes_.push_back(Node{std::move(value), std::move(inputs), needs ? std::move(backward) : nullptr, needs});
    return Var(this, nodes_.size() - 1);
}

Gradients Tape::backward(Var loss, const ParamStore& store) {
    if (loss.tape_ != this) throw Error("backward(): loss was recorded on a different tape");
    if (!value(loss.id_).is_scalar()) {
        throw DimensionError("backward() needs a scalar loss, got " + shape_to_string(value(loss.id_).shape()));
    }
    grads_.clear();
    grads_.reserve(nodes_.size());
    for (const auto& n : nodes_) grads_.push_back(Tensor::zeros_like(n.value));
    grads_[loss.id_][0] = 1.0;

    for (std::size_t i = loss.id_ + 1; i-- > 0;) {
        if (nodes_[i].backward) nodes_[i].backward(*this, i);
    }

    Gradients out;
    for (const auto& [name, t] : store.entries()) {
        auto it = params_.find(name);
        out.emplace(name, it == params_.end() ? Tensor::zeros_like(t) : grads_[it->second]);
    }
    return out;
}

namespace {

void require_same_tape(Var a, Var b) {
    if (&a.tape() != &b.tape()) throw Error("operands recorded on different tapes");
}

std::string pair_shapes(const Tensor& a, const Tensor& b) {
    return shape_to_string(a.shape()) + " and " + shape_to_string(b.shape());
}

template <typename Fwd, typename Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
    const Tensor& x = a.value();
    Tensor y = x;
    for (auto& v : y.data()) v = fwd(v);
    const std::size_t ia = a.id();
    return a.tape().record(std::move(y), {ia}, [ia, deriv](Tape& t, std::size_t self) {
        const Tensor& gy = t.grad(self);
        const Tensor& xv = t.value(ia);
        const Tensor& yv = t.value(self);
        Tensor& gx = t.grad(ia);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * deriv(xv[i], yv[i]);
    });
}

} // namespace

Var matmul(Var a, Var b) {
    require_same_tape(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.rank() != 2 || bv.rank() != 2 || av.shape()[1] != bv.shape()[0]) {
        throw DimensionError("matmul: incompatible shapes " + pair_shapes(av, bv));
    }
    const std::size_t m = av.shape()[0], k = av.shape()[1], n = bv.shape()[1];
    Tensor c({m, n});
    const double* ad = av.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = &c.data()[i * n];
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ad[i * k + p];
            if (aip == 0.0) continue;
            const double* brow = &bv.data()[p * n];
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape().record(std::move(c), {ia, ib}, [ia, ib, m, k, n](Tape& t, std::size_t self) {
        const Tensor& gc = t.grad(self);
        const double* g = gc.data().data();
        if (t.requires_grad(ia)) {
            // dA = dC * B^T
            const double* b = t.value(ib).data().data();
            double* ga = t.grad(ia).data().data();
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = g + i * n;
                for (std::size_t p = 0; p < k; ++p) {
                    const double* brow = b + p * n;
                    double s = 0.0;
                    for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
                    ga[i * k + p] += s;
                }
            }
        }
        if (t.requires_grad(ib)) {
            // dB = A^T * dC
            const double* a = t.value(ia).data().data();
            double* gb = t.grad(ib).data().data();
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = g + i * n;
                for (std::size_t p = 0; p < k; ++p) {
                    const double aip = a[i * k + p];
                    if (aip == 0.0) continue;
                    double* gbrow = gb + p * n;
                    for (std::size_t j = 0; j < n; ++j) gbrow[j] += aip * grow[j];
                }
            }
        }
    });
}

namespace {

enum class Binary { add, sub, mul };

Var binary(Var a, Var b, Binary op) {
    require_same_tape(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    const bool a_scalar = av.is_scalar() && !bv.is_scalar();
    const bool b_scalar = bv.is_scalar() && !av.is_scalar();
    if (!a_scalar && !b_scalar && av.shape() != bv.shape()) {
        throw DimensionError("elementwise op: incompatible shapes " + pair_shapes(av, bv));
    }
    Tensor out = a_scalar ? bv : av;
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double x = a_scalar ? av[0] : av[i];
        const double y = b_scalar ? bv[0] : bv[i];
        switch (op) {
        case Binary::add: out[i] = x + y; break;
        case Binary::sub: out[i] = x - y; break;
        case Binary::mul: out[i] = x * y; break;
        }
    }
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape().record(std::move(out), {ia, ib}, [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& x = t.value(ia);
        const Tensor& y = t.value(ib);
        const bool ga_req = t.requires_grad(ia);
        const bool gb_req = t.requires_grad(ib);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t ix = a_scalar ? 0 : i;
            const std::size_t iy = b_scalar ? 0 : i;
            double da = 0.0, db = 0.0;
            switch (op) {
            case Binary::add: da = g[i]; db = g[i]; break;
            case Binary::sub: da = g[i]; db = -g[i]; break;
            case Binary::mul: da = g[i] * y[iy]; db = g[i] * x[ix]; break;
            }
            if (ga_req) t.grad(ia)[ix] += da;
            if (gb_req) t.grad(ib)[iy] += db;
        }
    });
}

} // namespace

Var add(Var a, Var b) { return binary(a, b, Binary::add); }
Var sub(Var a, Var b) { return binary(a, b, Binary::sub); }
Var mul(Var a, Var b) { return binary(a, b, Binary::mul); }

Var scale(Var a, double factor) {
    return unary(a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Var neg(Var a) { return scale(a, -1.0); }

Var relu(Var a) {
    return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
    return unary(
        a,
        [](double x) {
            if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
            const double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
    return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var exp(Var a) {
    return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
    for (double v : a.value().data()) {
        if (!(v > 0.0)) throw DomainError("log of non-positive entry " + std::to_string(v));
    }
    return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var add_bias(Var x, Var bias) {
    require_same_tape(x, bias);
    const Tensor& xv = x.value();
    const Tensor& bv = bias.value();
    const std::size_t rows = xv.rows(), cols = xv.cols();
    if (bv.size() != cols) throw DimensionError("add_bias: bias " + pair_shapes(bv, xv));
    Tensor out = xv;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out.at(r, c) += bv[c];
    const std::size_t ix = x.id(), ib = bias.id();
    return x.tape().record(std::move(out), {ix, ib}, [=](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        if (t.requires_grad(ix)) t.grad(ix) += g;
        if (t.requires_grad(ib)) {
            Tensor& gb = t.grad(ib);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) gb[c] += g.at(r, c);
        }
    });
}

Var sum(Var a) {
    double s = 0.0;
    for (double v : a.value().data()) s += v;
    const std::size_t ia = a.id();
    return a.tape().record(Tensor::scalar(s), {ia}, [ia](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        for (auto& v : t.grad(ia).data()) v += g;
    });
}

Var reshape(Var a, Shape shape) {
    Tensor out = a.value().reshaped(std::move(shape));
    const std::size_t ia = a.id();
    return a.tape().record(std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
        auto g = t.grad(self).data();
        auto gx = t.grad(ia).data();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
}

Var weighted_neighbor_agg(Var h, const EdgeList& edges, Var weights, AggMode mode) {
    require_same_tape(h, weights);
    const Tensor& hv = h.value();
    if (hv.rank() != 2 || hv.shape()[0] != edges.nodes) {
        throw DimensionError("weighted_neighbor_agg: features " + shape_to_string(hv.shape()) + " for a graph with " +
                             std::to_string(edges.nodes) + " nodes");
    }
    if (edges.size() > 0 && weights.value().size() != edges.size()) {
        throw DimensionError("weighted_neighbor_agg: " + std::to_string(weights.value().size()) + " weights for " +
                             std::to_string(edges.size()) + " edges");
    }
    const std::size_t d = hv.shape()[1];
    std::vector<double> inv_degree(edges.nodes, 1.0);
    if (mode == AggMode::mean) {
        std::vector<std::size_t> degree(edges.nodes, 0);
        for (auto v : edges.dst) ++degree[v];
        for (std::size_t v = 0; v < edges.nodes; ++v) inv_degree[v] = degree[v] ? 1.0 / double(degree[v]) : 0.0;
    }
    const Tensor& w = weights.value();
    Tensor out({edges.nodes, d});
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const std::size_t u = edges.src[e], v = edges.dst[e];
        const double c = w[e] * inv_degree[v];
        for (std::size_t j = 0; j < d; ++j) out.at(v, j) += c * hv.at(u, j);
    }
    const std::size_t ih = h.id(), iw = weights.id();
    return h.tape().record(std::move(out), {ih, iw},
                           [ih, iw, d, edges, inv_degree = std::move(inv_degree)](Tape& t, std::size_t self) {
                               const Tensor& g = t.grad(self);
                               const Tensor& hv = t.value(ih);
                               const Tensor& wv = t.value(iw);
                               const bool need_h = t.requires_grad(ih);
                               const bool need_w = t.requires_grad(iw);
                               for (std::size_t e = 0; e < edges.size(); ++e) {
                                   const std::size_t u = edges.src[e], v = edges.dst[e];
                                   if (need_h) {
                                       Tensor& gh = t.grad(ih);
                                       const double c = wv[e] * inv_degree[v];
                                       for (std::size_t j = 0; j < d; ++j) gh.at(u, j) += c * g.at(v, j);
                                   }
                                   if (need_w) {
                                       double s = 0.0;
                                       for (std::size_t j = 0; j < d; ++j) s += g.at(v, j) * hv.at(u, j);
                                       t.grad(iw)[e] += s * inv_degree[v];
                                   }
                               }
                           });
}

Tensor softmax_rows(const Tensor& logits) {
    Tensor p = logits;
    const std::size_t rows = p.rows(), cols = p.cols();
    for (std::size_t r = 0; r < rows; ++r) {
        double mx = p.at(r, 0);
        for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, p.at(r, c));
        double z = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            p.at(r, c) = std::exp(p.at(r, c) - mx);
            z += p.at(r, c);
        }
        for (std::size_t c = 0; c < cols; ++c) p.at(r, c) /= z;
    }
    return p;
}

namespace {

Tensor log_softmax_rows(const Tensor& logits) {
    Tensor out = logits;
    const std::size_t rows = out.rows(), cols = out.cols();
    for (std::size_t r = 0; r < rows; ++r) {
        double mx = out.at(r, 0);
        for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, out.at(r, c));
        double z = 0.0;
        for (std::size_t c = 0; c < cols; ++c) z += std::exp(out.at(r, c) - mx);
        const double lse = mx + std::log(z);
        for (std::size_t c = 0; c < cols; ++c) out.at(r, c) -= lse;
    }
    return out;
}

} // namespace

Var log_softmax(Var logits) {
    Tensor out = log_softmax_rows(logits.value());
    const std::size_t il = logits.id();
    return logits.tape().record(std::move(out), {il}, [il](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& y = t.value(self);
        Tensor& gx = t.grad(il);
        const std::size_t rows = y.rows(), cols = y.cols();
        for (std::size_t r = 0; r < rows; ++r) {
            double gs = 0.0;
            for (std::size_t c = 0; c < cols; ++c) gs += g.at(r, c);
            for (std::size_t c = 0; c < cols; ++c) gx.at(r, c) += g.at(r, c) - std::exp(y.at(r, c)) * gs;
        }
    });
}

Var softmax_logprob(Var logits, std::span<const std::size_t> actions) {
    const Tensor& lv = logits.value();
    const std::size_t rows = lv.rows(), cols = lv.cols();
    if (actions.size() != rows) {
        throw DimensionError("softmax_logprob: " + std::to_string(actions.size()) + " actions for " +
                             std::to_string(rows) + " rows");
    }
    for (std::size_t r = 0; r < rows; ++r) {
        if (actions[r] >= cols) {
            throw IndexError("action index " + std::to_string(actions[r]) + " out of range for " +
                             std::to_string(cols) + " actions");
        }
    }
    const Tensor lp = log_softmax_rows(lv);
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) total += lp.at(r, actions[r]);
    const std::size_t il = logits.id();
    std::vector<std::size_t> acts(actions.begin(), actions.end());
    return logits.tape().record(Tensor::scalar(total), {il},
                                [il, lp, acts = std::move(acts)](Tape& t, std::size_t self) {
                                    const double g = t.grad(self)[0];
                                    Tensor& gx = t.grad(il);
                                    const std::size_t rows = lp.rows(), cols = lp.cols();
                                    for (std::size_t r = 0; r < rows; ++r) {
                                        for (std::size_t c = 0; c < cols; ++c) {
                                            const double onehot = c == acts[r] ? 1.0 : 0.0;
                                            gx.at(r, c) += g * (onehot - std::exp(lp.at(r, c)));
                                        }
                                    }
                                });
}

} // namespace gmarl
