#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gmarl/autodiff.hpp"
#include "gmarl/radio.hpp"
#include "gmarl/topology.hpp"

namespace gmarl {

enum class GraphStrategy { binary, distance, relation, learned };

std::string to_string(GraphStrategy s);
GraphStrategy graph_strategy_from_string(const std::string& name);

/// Agent communication graph. adjacency[u * nodes + v] is the weight of the
/// edge u -> v, i.e. how strongly node v listens to node u. Diagonal is zero.
struct CommGraph {
    std::size_t nodes = 0;
    std::vector<double> adjacency;
    bool directed = false;
    bool weighted = false;
    GraphStrategy strategy = GraphStrategy::binary;

    double at(std::size_t u, std::size_t v) const { return adjacency[u * nodes + v]; }
    /// Non-zero entries as message edges, row-major order.
    EdgeList edges() const;
    /// Weights aligned with edges().
    std::vector<double> edge_weights() const;
};

/// a(u,v) = 1 iff 0 < |s(u) - s(v)| < range. Symmetric, unweighted.
CommGraph binary_edges(const NetworkTopology& topo, double range_m);

/// a(u,v) = exp(-|s(u) - s(v)| / scale) for u != v, then each row scaled to sum 1.
CommGraph distance_edges(const NetworkTopology& topo, double scale_m);

/// Mutual-interference graph. For each cell u, the probe points where u is
/// best server with every cell at `tx_avg_dbm` form its nominal coverage;
/// a(u,v) is proportional to the mean power received there from v at
/// `tx_max_dbm` (watts), rows normalised to sum 1. Cells with no coverage get
/// an all-zero row. Directed.
CommGraph relation_edges(const NetworkTopology& topo, const RadioParams& radio, double tx_avg_dbm,
                         double tx_max_dbm, std::span<const Point> probe_grid);

struct DirectedEdge {
    std::size_t from = 0;
    std::size_t to = 0;

    friend bool operator==(const DirectedEdge&, const DirectedEdge&) = default;
};

/// Ordered pairs (u, v), u != v, closer than `range_m`; sorted by (from, to).
std::vector<DirectedEdge> candidate_edges(const NetworkTopology& topo, double range_m);

struct EdgeFeature {
    double distance_m = 0.0;
    double sin_theta = 0.0;
    double cos_theta = 0.0;
};

/// Geometry of the edge u -> v with theta = atan2(v.y - u.y, v.x - u.x).
EdgeFeature edge_feature(const Point& u, const Point& v);
std::vector<EdgeFeature> edge_features(const NetworkTopology& topo, std::span<const DirectedEdge> pairs);

inline constexpr const char* kThetaFormula = "theta = atan2(v_y - u_y, v_x - u_x)";

/// Which base-graph edges are joined in the line graph.
enum class LineGraphRule {
    shared_origin,   ///< o(i) == o(j)
    shared_endpoint, ///< the two edges have any node in common
};

std::string to_string(LineGraphRule rule);
LineGraphRule line_graph_rule_from_string(const std::string& name);

/// One node per directed base edge; binary, self-pair free adjacency.
struct LineGraph {
    std::vector<DirectedEdge> nodes;
    std::vector<EdgeFeature> features;
    std::vector<std::uint8_t> adjacency;
    LineGraphRule rule = LineGraphRule::shared_origin;

    std::size_t size() const { return nodes.size(); }
    bool adjacent(std::size_t i, std::size_t j) const { return adjacency[i * nodes.size() + j] != 0; }
    EdgeList edges() const;
};

LineGraph build_line_graph(std::span<const DirectedEdge> edges, std::span<const EdgeFeature> features,
                           LineGraphRule rule = LineGraphRule::shared_origin);

/// Structured-text dump of a graph: strategy tag plus dense adjacency.
std::string graph_dump(const CommGraph& graph);

} // namespace gmarl
