#include "gmarl/policy.hpp"

#include <cmath>
#include <cstdio>

#include "gmarl/error.hpp"

namespace gmarl {

std::string to_string(Strategy s) {
    switch (s) {
    case Strategy::mlp: return "mlp";
    case Strategy::binary: return "binary";
    case Strategy::distance: return "distance";
    case Strategy::relation: return "relation";
    case Strategy::learned: return "learned";
    }
    return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
    for (auto s : all_strategies())
        if (to_string(s) == name) return s;
    throw ConfigError("unknown strategy '" + name + "' (expected mlp, binary, distance, relation or learned)");
}

std::vector<Strategy> all_strategies() {
    return {Strategy::mlp, Strategy::binary, Strategy::distance, Strategy::relation, Strategy::learned};
}

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation activation_from_string(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw ConfigError("unknown activation '" + name + "'");
}

namespace {

std::string agg_name(AggMode m) { return m == AggMode::mean ? "mean" : "sum"; }

AggMode agg_from_string(const std::string& name) {
    if (name == "mean") return AggMode::mean;
    if (name == "sum") return AggMode::sum;
    throw ConfigError("unknown aggregation '" + name + "'");
}

Var activate(Var x, Activation a) { return a == Activation::relu ? relu(x) : tanh(x); }

std::string layer_name(const std::string& prefix, std::size_t l, const char* leaf) {
    return prefix + ".layer" + std::to_string(l) + "." + leaf;
}

} // namespace

void PolicySpec::validate() const {
    if (gnn.layers < 1 || gnn.hidden < 1) throw ConfigError("policy needs at least one layer and one hidden unit");
    if (strategy == Strategy::learned && (aux.layers < 1 || aux.hidden < 1)) {
        throw ConfigError("auxiliary network needs at least one layer and one hidden unit");
    }
    if (input_dim == 0 || actions == 0) throw ConfigError("policy input and action sizes must be positive");
    if (!(aux.distance_scale_m > 0.0)) throw ConfigError("aux distance scale must be positive");
}

PolicySpec policy_spec_from_config(const Config& c, Strategy strategy, const Scenario& scenario) {
    PolicySpec spec;
    spec.strategy = strategy;
    spec.gnn.layers = static_cast<std::size_t>(c.get_int("policy.layers", 2));
    spec.gnn.hidden = static_cast<std::size_t>(c.get_int("policy.hidden", 64));
    spec.gnn.activation = activation_from_string(c.get_string("policy.activation", "relu"));
    spec.gnn.agg = agg_from_string(c.get_string("policy.agg", "mean"));
    spec.aux.layers = static_cast<std::size_t>(c.get_int("aux.layers", 2));
    spec.aux.hidden = static_cast<std::size_t>(c.get_int("aux.hidden", 16));
    spec.aux.activation = activation_from_string(c.get_string("aux.activation", "relu"));
    spec.aux.distance_scale_m = c.get_double("aux.distance_scale_m", 1000.0);
    spec.input_dim = scenario.feature_dim();
    spec.actions = scenario.power.size();
    spec.validate();
    return spec;
}

GraphContext graph_context_from(const CommGraph& graph) {
    GraphContext ctx;
    switch (graph.strategy) {
    case GraphStrategy::binary: ctx.strategy = Strategy::binary; break;
    case GraphStrategy::distance: ctx.strategy = Strategy::distance; break;
    case GraphStrategy::relation: ctx.strategy = Strategy::relation; break;
    case GraphStrategy::learned: ctx.strategy = Strategy::learned; break;
    }
    ctx.agents = graph.nodes;
    ctx.edges = graph.edges();
    ctx.weights = graph.edge_weights();
    return ctx;
}

GraphContext learned_graph_context(const NetworkTopology& topo, double range_m, LineGraphRule rule,
                                   const AuxGnnConfig& aux) {
    GraphContext ctx;
    ctx.strategy = Strategy::learned;
    ctx.agents = topo.size();
    const auto candidates = candidate_edges(topo, range_m);
    const auto feats = edge_features(topo, candidates);
    ctx.edges.nodes = topo.size();
    for (const auto& e : candidates) ctx.edges.add(e.from, e.to);
    ctx.line_graph = build_line_graph(candidates, feats, rule);
    ctx.line_edges = ctx.line_graph.edges();
    if (!candidates.empty()) {
        Tensor f({candidates.size(), 3});
        for (std::size_t i = 0; i < feats.size(); ++i) {
            f.at(i, 0) = feats[i].distance_m / aux.distance_scale_m;
            f.at(i, 1) = feats[i].sin_theta;
            f.at(i, 2) = feats[i].cos_theta;
        }
        ctx.line_features = std::move(f);
    }
    return ctx;
}

CommGraph build_comm_graph(Strategy strategy, const Scenario& s) {
    switch (strategy) {
    case Strategy::binary: return binary_edges(s.topology, s.graph.binary_range_m);
    case Strategy::distance: return distance_edges(s.topology, s.graph.distance_scale_m);
    case Strategy::relation: {
        const auto probes = lattice(s.topology.bounds, s.graph.probe_spacing_m);
        return relation_edges(s.topology, s.radio, s.power.average_dbm(), s.power.max_dbm(), probes);
    }
    case Strategy::learned: {
        CommGraph g;
        g.nodes = s.agents();
        g.adjacency.assign(g.nodes * g.nodes, 0.0);
        g.directed = true;
        g.weighted = true;
        g.strategy = GraphStrategy::learned;
        for (const auto& e : candidate_edges(s.topology, s.graph.binary_range_m)) g.adjacency[e.from * g.nodes + e.to] = 1.0;
        return g;
    }
    case Strategy::mlp: break;
    }
    throw ConfigError("the mlp strategy has no communication graph");
}

GraphContext make_graph_context(Strategy strategy, const Scenario& s, const AuxGnnConfig& aux) {
    if (strategy == Strategy::mlp) {
        GraphContext ctx;
        ctx.strategy = Strategy::mlp;
        ctx.agents = s.agents();
        ctx.edges.nodes = s.agents();
        return ctx;
    }
    if (strategy == Strategy::learned) {
        return learned_graph_context(s.topology, s.graph.binary_range_m, s.graph.line_graph_rule, aux);
    }
    return graph_context_from(build_comm_graph(strategy, s));
}

ParamStore init_policy_params(const PolicySpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    ParamStore store;
    auto weight = [&](const std::string& name, std::size_t fan_in, std::size_t fan_out) {
        const double bound = 1.0 / std::sqrt(double(fan_in));
        std::uniform_real_distribution<double> u(-bound, bound);
        Tensor w({fan_in, fan_out});
        for (auto& v : w.data()) v = u(rng);
        store.add(name, std::move(w));
    };
    auto bias = [&](const std::string& name, std::size_t n) { store.add(name, Tensor({n}, 0.0)); };

    if (spec.strategy == Strategy::mlp) {
        std::size_t in = spec.input_dim;
        for (std::size_t l = 0; l < spec.gnn.layers; ++l) {
            weight(layer_name("mlp", l, "W"), in, spec.gnn.hidden);
            bias(layer_name("mlp", l, "bias"), spec.gnn.hidden);
            in = spec.gnn.hidden;
        }
        weight("mlp.head.W", in, spec.actions);
        bias("mlp.head.bias", spec.actions);
        return store;
    }

    std::size_t in = spec.input_dim;
    for (std::size_t l = 0; l < spec.gnn.layers; ++l) {
        weight(layer_name("policy", l, "W1"), in, spec.gnn.hidden);
        weight(layer_name("policy", l, "W2"), in, spec.gnn.hidden);
        bias(layer_name("policy", l, "bias"), spec.gnn.hidden);
        in = spec.gnn.hidden;
    }
    weight("head.W", in, spec.actions);
    bias("head.bias", spec.actions);

    if (spec.strategy == Strategy::learned) {
        in = 3;
        for (std::size_t l = 0; l < spec.aux.layers; ++l) {
            weight(layer_name("aux", l, "W1"), in, spec.aux.hidden);
            weight(layer_name("aux", l, "W2"), in, spec.aux.hidden);
            bias(layer_name("aux", l, "bias"), spec.aux.hidden);
            in = spec.aux.hidden;
        }
        weight("aux.head.W", in, 1);
        bias("aux.head.bias", 1);
    }
    return store;
}

Var gnn_layers(Tape& tape, const ParamStore& params, const std::string& prefix, std::size_t layers,
               Activation activation, AggMode agg, Var h, const EdgeList& edges, Var weights) {
    for (std::size_t l = 0; l < layers; ++l) {
        const Var w1 = tape.param(params, layer_name(prefix, l, "W1"));
        const Var b = tape.param(params, layer_name(prefix, l, "bias"));
        if (h.shape()[1] != w1.shape()[0]) {
            throw DimensionError(prefix + " layer " + std::to_string(l) + ": features " + shape_to_string(h.shape()) +
                                 " do not match W1 " + shape_to_string(w1.shape()));
        }
        Var pre = matmul(h, w1);
        if (edges.size() > 0) {
            const Var w2 = tape.param(params, layer_name(prefix, l, "W2"));
            pre = add(pre, matmul(weighted_neighbor_agg(h, edges, weights, agg), w2));
        }
        h = activate(add_bias(pre, b), activation);
    }
    return h;
}

Var gnn_forward(Tape& tape, const ParamStore& params, const GnnPolicyConfig& cfg, Var features,
                const EdgeList& edges, Var weights) {
    if (features.shape().size() != 2 || features.shape()[0] != edges.nodes) {
        throw DimensionError("gnn_forward: features " + shape_to_string(features.shape()) + " for " +
                             std::to_string(edges.nodes) + " agents");
    }
    const Var h = gnn_layers(tape, params, "policy", cfg.layers, cfg.activation, cfg.agg, features, edges, weights);
    return add_bias(matmul(h, tape.param(params, "head.W")), tape.param(params, "head.bias"));
}

Var aux_forward(Tape& tape, const ParamStore& params, const AuxGnnConfig& cfg, const GraphContext& ctx) {
    if (ctx.edges.size() == 0) throw DimensionError("aux_forward: no candidate edges");
    const Var x = tape.constant(ctx.line_features);
    const Var ones = tape.constant(Tensor({ctx.line_edges.size() ? ctx.line_edges.size() : 1}, 1.0));
    const Var h = gnn_layers(tape, params, "aux", cfg.layers, cfg.activation, AggMode::mean, x, ctx.line_edges, ones);
    return sigmoid(add_bias(matmul(h, tape.param(params, "aux.head.W")), tape.param(params, "aux.head.bias")));
}

Var composed_forward(Tape& tape, const ParamStore& params, const PolicySpec& spec, const GraphContext& ctx,
                     Var features) {
    if (ctx.edges.size() == 0) return gnn_forward(tape, params, spec.gnn, features, ctx.edges, Var{});
    const Var w = aux_forward(tape, params, spec.aux, ctx);
    return gnn_forward(tape, params, spec.gnn, features, ctx.edges, w);
}

Var mlp_forward(Tape& tape, const ParamStore& params, const GnnPolicyConfig& cfg, Var features) {
    Var h = features;
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const Var w = tape.param(params, layer_name("mlp", l, "W"));
        if (h.shape().size() != 2 || h.shape()[1] != w.shape()[0]) {
            throw DimensionError("mlp layer " + std::to_string(l) + ": features " + shape_to_string(h.shape()) +
                                 " do not match W " + shape_to_string(w.shape()));
        }
        h = activate(add_bias(matmul(h, w), tape.param(params, layer_name("mlp", l, "bias"))), cfg.activation);
    }
    return add_bias(matmul(h, tape.param(params, "mlp.head.W")), tape.param(params, "mlp.head.bias"));
}

PolicyOutput policy_forward(Tape& tape, const ParamStore& params, const PolicySpec& spec, const GraphContext& ctx,
                            const Tensor& features) {
    if (features.rank() != 2 || features.shape()[0] != ctx.agents) {
        throw DimensionError("policy_forward: features " + shape_to_string(features.shape()) + " for " +
                             std::to_string(ctx.agents) + " agents");
    }
    if (features.shape()[1] != spec.input_dim) {
        throw DimensionError("policy_forward: feature width " + std::to_string(features.shape()[1]) +
                             " but the policy expects " + std::to_string(spec.input_dim));
    }
    const Var x = tape.constant(features);
    Var logits;
    switch (spec.strategy) {
    case Strategy::mlp: logits = mlp_forward(tape, params, spec.gnn, x); break;
    case Strategy::learned: logits = composed_forward(tape, params, spec, ctx, x); break;
    default: {
        const Var w = tape.constant(Tensor({ctx.weights.empty() ? 1 : ctx.weights.size()},
                                           ctx.weights.empty() ? std::vector<double>{0.0} : ctx.weights));
        logits = gnn_forward(tape, params, spec.gnn, x, ctx.edges, w);
    }
    }
    return {logits, softmax_rows(logits.value())};
}

ActionSample sample_actions(const Tensor& probs, std::mt19937_64& rng, SampleMode mode) {
    ActionSample out;
    const std::size_t rows = probs.rows(), cols = probs.cols();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t pick = 0;
        if (mode == SampleMode::greedy) {
            for (std::size_t c = 1; c < cols; ++c)
                if (probs.at(r, c) > probs.at(r, pick)) pick = c;
        } else {
            const double u = unit(rng);
            double acc = 0.0;
            pick = cols;
            for (std::size_t c = 0; c < cols; ++c) {
                acc += probs.at(r, c);
                if (u < acc) {
                    pick = c;
                    break;
                }
            }
            // Rounding can leave acc slightly below 1; fall back to the last non-zero entry.
            if (pick == cols) {
                pick = cols - 1;
                while (pick > 0 && probs.at(r, pick) == 0.0) --pick;
            }
        }
        out.actions.push_back(pick);
        out.log_prob += std::log(probs.at(r, pick));
    }
    return out;
}

ActionSample sample_actions(const Tensor& probs, std::uint64_t seed, SampleMode mode) {
    std::mt19937_64 rng(seed);
    return sample_actions(probs, rng, mode);
}

Checkpoint make_checkpoint(const ParamStore& params, const PolicySpec& spec, const std::string& config_digest,
                           std::uint64_t seed) {
    Checkpoint c;
    c.params = params;
    c.strategy = to_string(spec.strategy);
    c.config_digest = config_digest;
    c.seed = seed;
    c.attributes = {
        {"policy.layers", std::to_string(spec.gnn.layers)},
        {"policy.hidden", std::to_string(spec.gnn.hidden)},
        {"policy.activation", to_string(spec.gnn.activation)},
        {"policy.agg", agg_name(spec.gnn.agg)},
        {"aux.layers", std::to_string(spec.aux.layers)},
        {"aux.hidden", std::to_string(spec.aux.hidden)},
        {"aux.activation", to_string(spec.aux.activation)},
        {"input_dim", std::to_string(spec.input_dim)},
        {"actions", std::to_string(spec.actions)},
    };
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", spec.aux.distance_scale_m);
    c.attributes["aux.distance_scale_m"] = buf;
    return c;
}

PolicySpec spec_from_checkpoint(const Checkpoint& ckpt) {
    Config c;
    for (const auto& [k, v] : ckpt.attributes) c.set(k, v);
    PolicySpec spec;
    spec.strategy = strategy_from_string(ckpt.strategy);
    spec.gnn.layers = static_cast<std::size_t>(c.get_int("policy.layers", 2));
    spec.gnn.hidden = static_cast<std::size_t>(c.get_int("policy.hidden", 64));
    spec.gnn.activation = activation_from_string(c.get_string("policy.activation", "relu"));
    spec.gnn.agg = agg_from_string(c.get_string("policy.agg", "mean"));
    spec.aux.layers = static_cast<std::size_t>(c.get_int("aux.layers", 2));
    spec.aux.hidden = static_cast<std::size_t>(c.get_int("aux.hidden", 16));
    spec.aux.activation = activation_from_string(c.get_string("aux.activation", "relu"));
    spec.aux.distance_scale_m = c.get_double("aux.distance_scale_m", 1000.0);
    spec.input_dim = static_cast<std::size_t>(c.get_int("input_dim", 0));
    spec.actions = static_cast<std::size_t>(c.get_int("actions", 0));
    spec.validate();
    return spec;
}

} // namespace gmarl
