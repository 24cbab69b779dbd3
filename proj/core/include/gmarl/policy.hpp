#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gmarl/autodiff.hpp"
#include "gmarl/checkpoint.hpp"
#include "gmarl/config.hpp"
#include "gmarl/graph.hpp"
#include "gmarl/scenario.hpp"

namespace gmarl {

/// Policy parameterisation. `mlp` is the message-free baseline; the others
/// are the shared GNN policy over the named communication graph.
enum class Strategy { mlp, binary, distance, relation, learned };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);
std::vector<Strategy> all_strategies();

enum class Activation { relu, tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct GnnPolicyConfig {
    std::size_t layers = 2;
    std::size_t hidden = 64;
    Activation activation = Activation::relu;
    AggMode agg = AggMode::mean;
};

struct AuxGnnConfig {
    std::size_t layers = 2;
    std::size_t hidden = 16;
    Activation activation = Activation::relu;
    /// Edge distances are divided by this before entering the network.
    double distance_scale_m = 1000.0;
};

struct PolicySpec {
    Strategy strategy = Strategy::learned;
    GnnPolicyConfig gnn;
    AuxGnnConfig aux;
    std::size_t input_dim = 0;
    std::size_t actions = 0;

    void validate() const;
};

/// Reads policy.* / aux.* keys; input and action sizes come from the scenario.
PolicySpec policy_spec_from_config(const Config& config, Strategy strategy, const Scenario& scenario);

/// Graph inputs of one topology, prepared once per scenario.
struct GraphContext {
    Strategy strategy = Strategy::mlp;
    std::size_t agents = 0;
    /// Message edges for the static strategies, or the learned candidates.
    EdgeList edges;
    /// Static edge weights aligned with `edges` (unused for learned edges).
    std::vector<double> weights;
    LineGraph line_graph;
    EdgeList line_edges;
    /// Normalised edge features [E x 3] fed to the auxiliary network.
    Tensor line_features;
};

GraphContext make_graph_context(Strategy strategy, const Scenario& scenario, const AuxGnnConfig& aux = {});
/// Context over an explicit graph (used by tests and graph dumps).
GraphContext graph_context_from(const CommGraph& graph);
GraphContext learned_graph_context(const NetworkTopology& topo, double range_m, LineGraphRule rule,
                                   const AuxGnnConfig& aux);
/// The communication graph the strategy induces on a scenario (learned: candidate set, unit weights).
CommGraph build_comm_graph(Strategy strategy, const Scenario& scenario);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
ParamStore init_policy_params(const PolicySpec& spec, std::uint64_t seed);

/// Stacked conv layers h' = act(h W1 + AGG(e_uv h_u) W2 + b) under `prefix`,
/// returning the last hidden representation.
Var gnn_layers(Tape& tape, const ParamStore& params, const std::string& prefix, std::size_t layers,
               Activation activation, AggMode agg, Var h, const EdgeList& edges, Var weights);

/// Per-node logits [V x A] of the shared GNN policy.
Var gnn_forward(Tape& tape, const ParamStore& params, const GnnPolicyConfig& cfg, Var features,
                const EdgeList& edges, Var weights);

/// Edge weights in (0, 1), one per line-graph node, shape [E x 1].
Var aux_forward(Tape& tape, const ParamStore& params, const AuxGnnConfig& cfg, const GraphContext& ctx);

/// Auxiliary edge weights feeding the policy GNN on one tape.
Var composed_forward(Tape& tape, const ParamStore& params, const PolicySpec& spec, const GraphContext& ctx,
                     Var features);

/// Per-agent MLP with shared weights and no message passing.
Var mlp_forward(Tape& tape, const ParamStore& params, const GnnPolicyConfig& cfg, Var features);

struct PolicyOutput {
    Var logits;
    /// Per-agent action distributions [V x A].
    Tensor probs;
};

/// Dispatches on spec.strategy.
PolicyOutput policy_forward(Tape& tape, const ParamStore& params, const PolicySpec& spec, const GraphContext& ctx,
                            const Tensor& features);

enum class SampleMode { sample, greedy };

struct ActionSample {
    std::vector<std::size_t> actions;
    double log_prob = 0.0;
};

/// Categorical draw per agent, or argmax with ties to the lowest index.
ActionSample sample_actions(const Tensor& probs, std::mt19937_64& rng, SampleMode mode);
ActionSample sample_actions(const Tensor& probs, std::uint64_t seed, SampleMode mode);

Checkpoint make_checkpoint(const ParamStore& params, const PolicySpec& spec, const std::string& config_digest,
                           std::uint64_t seed);
PolicySpec spec_from_checkpoint(const Checkpoint& ckpt);

} // namespace gmarl
