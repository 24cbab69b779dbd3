#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gmarl/tensor.hpp"

namespace gmarl {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    Tape& tape() const { return *tape_; }
    std::size_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Directed message edges src[i] -> dst[i] over `nodes` vertices.
struct EdgeList {
    std::size_t nodes = 0;
    std::vector<std::size_t> src;
    std::vector<std::size_t> dst;

    std::size_t size() const { return src.size(); }
    void add(std::size_t from, std::size_t to) {
        src.push_back(from);
        dst.push_back(to);
    }
};

enum class AggMode { sum, mean };

/// Append-only record of one forward pass. A fresh tape is used per episode.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    /// Leaf for a named parameter. Repeated calls with the same name return the
    /// same node so gradients accumulate in one place.
    Var param(const ParamStore& store, const std::string& name);

    /// Reverse sweep from a scalar loss. Returns a gradient for every entry of
    /// `store`; entries that were never read on this tape get exact zeros.
    Gradients backward(Var loss, const ParamStore& store);

    // Used by op implementations.
    Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);
    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    Tensor& grad(std::size_t id) { return grads_[id]; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        std::vector<std::size_t> inputs;
        BackwardFn backward;
        bool requires_grad = false;
    };

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
    std::unordered_map<std::string, std::size_t> params_;
};

Var matmul(Var a, Var b);
/// Elementwise sum. Either operand may be a scalar (size 1).
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product. Either operand may be a scalar (size 1).
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var neg(Var a);
Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
/// Throws DomainError on any non-positive entry.
Var log(Var a);
/// x[V x d] + bias[d] broadcast over rows.
Var add_bias(Var x, Var bias);
Var sum(Var a);
Var reshape(Var a, Shape shape);

/// Row v of the result aggregates weight[e] * h[src[e]] over every edge e with
/// dst[e] == v. Differentiable in both h and the edge weights. `weights` must
/// hold one value per edge (any shape); it is ignored for an empty edge list.
/// Nodes without in-edges get a zero row.
Var weighted_neighbor_agg(Var h, const EdgeList& edges, Var weights, AggMode mode);

/// Row-wise log-softmax of logits[V x A].
Var log_softmax(Var logits);

/// Sum over rows v of ln softmax(logits_v)[actions[v]], max-stabilised.
Var softmax_logprob(Var logits, std::span<const std::size_t> actions);

/// Row-wise softmax probabilities (no tape).
Tensor softmax_rows(const Tensor& logits);

} // namespace gmarl
