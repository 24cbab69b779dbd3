#include "gmarl/graph.hpp"

#include <cmath>

#include <json.hpp>

#include "gmarl/error.hpp"
#include "gmarl/log.hpp"

namespace gmarl {

std::string to_string(GraphStrategy s) {
    switch (s) {
    case GraphStrategy::binary: return "binary";
    case GraphStrategy::distance: return "distance";
    case GraphStrategy::relation: return "relation";
    case GraphStrategy::learned: return "learned";
    }
    return "unknown";
}

GraphStrategy graph_strategy_from_string(const std::string& name) {
    if (name == "binary") return GraphStrategy::binary;
    if (name == "distance") return GraphStrategy::distance;
    if (name == "relation") return GraphStrategy::relation;
    if (name == "learned") return GraphStrategy::learned;
    throw ConfigError("unknown graph strategy '" + name + "'");
}

std::string to_string(LineGraphRule rule) {
    return rule == LineGraphRule::shared_origin ? "shared_origin" : "shared_endpoint";
}

LineGraphRule line_graph_rule_from_string(const std::string& name) {
    if (name == "shared_origin" || name == "origin") return LineGraphRule::shared_origin;
    if (name == "shared_endpoint" || name == "endpoint") return LineGraphRule::shared_endpoint;
    throw ConfigError("unknown line-graph rule '" + name + "'");
}

EdgeList CommGraph::edges() const {
    EdgeList el;
    el.nodes = nodes;
    for (std::size_t u = 0; u < nodes; ++u)
        for (std::size_t v = 0; v < nodes; ++v)
            if (at(u, v) != 0.0) el.add(u, v);
    return el;
}

std::vector<double> CommGraph::edge_weights() const {
    std::vector<double> w;
    for (double a : adjacency)
        if (a != 0.0) w.push_back(a);
    return w;
}

namespace {

CommGraph empty_graph(std::size_t n, GraphStrategy s, bool directed, bool weighted) {
    CommGraph g;
    g.nodes = n;
    g.adjacency.assign(n * n, 0.0);
    g.strategy = s;
    g.directed = directed;
    g.weighted = weighted;
    return g;
}

void normalize_rows(CommGraph& g) {
    for (std::size_t u = 0; u < g.nodes; ++u) {
        double s = 0.0;
        for (std::size_t v = 0; v < g.nodes; ++v) s += g.adjacency[u * g.nodes + v];
        if (s <= 0.0) continue;
        for (std::size_t v = 0; v < g.nodes; ++v) g.adjacency[u * g.nodes + v] /= s;
    }
}

} // namespace

CommGraph binary_edges(const NetworkTopology& topo, double range_m) {
    if (!(range_m > 0.0)) throw ConfigError("binary edge range must be positive");
    const std::size_t n = topo.size();
    CommGraph g = empty_graph(n, GraphStrategy::binary, false, false);
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
            const double d = distance(topo.positions[u], topo.positions[v]);
            if (u != v && d > 0.0 && d < range_m) g.adjacency[u * n + v] = 1.0;
        }
    }
    return g;
}

CommGraph distance_edges(const NetworkTopology& topo, double scale_m) {
    if (!(scale_m > 0.0)) throw ConfigError("distance edge scale must be positive");
    const std::size_t n = topo.size();
    CommGraph g = empty_graph(n, GraphStrategy::distance, false, true);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v)
            if (u != v) g.adjacency[u * n + v] = std::exp(-distance(topo.positions[u], topo.positions[v]) / scale_m);
    normalize_rows(g);
    return g;
}

CommGraph relation_edges(const NetworkTopology& topo, const RadioParams& radio, double tx_avg_dbm,
                         double tx_max_dbm, std::span<const Point> probe_grid) {
    if (probe_grid.empty()) throw ConfigError("relation edges need a non-empty probe grid");
    const std::size_t n = topo.size();
    CommGraph g = empty_graph(n, GraphStrategy::relation, true, true);
    if (n < 2) return g;

    std::vector<double> interference(n * n, 0.0);
    std::vector<std::size_t> coverage(n, 0);
    std::vector<double> rx_avg(n), rx_max(n);
    for (const auto& p : probe_grid) {
        std::size_t best = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = distance(p, topo.positions[i]);
            rx_avg[i] = rx_power_w(tx_avg_dbm, d, radio);
            rx_max[i] = rx_power_w(tx_max_dbm, d, radio);
            if (rx_avg[i] > rx_avg[best]) best = i;
        }
        ++coverage[best];
        for (std::size_t v = 0; v < n; ++v)
            if (v != best) interference[best * n + v] += rx_max[v];
    }
    for (std::size_t u = 0; u < n; ++u) {
        if (coverage[u] == 0) {
            log_warning("relation edges: cell " + std::to_string(u) + " has no probe point in its coverage; isolated");
            continue;
        }
        for (std::size_t v = 0; v < n; ++v) g.adjacency[u * n + v] = interference[u * n + v] / double(coverage[u]);
    }
    normalize_rows(g);
    return g;
}

std::vector<DirectedEdge> candidate_edges(const NetworkTopology& topo, double range_m) {
    std::vector<DirectedEdge> out;
    const std::size_t n = topo.size();
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v)
            if (u != v && distance(topo.positions[u], topo.positions[v]) < range_m) out.push_back({u, v});
    return out;
}

EdgeFeature edge_feature(const Point& u, const Point& v) {
    const double dx = v.x - u.x;
    const double dy = v.y - u.y;
    const double d = std::hypot(dx, dy);
    if (d == 0.0) throw DomainError("edge feature of a degenerate pair (coincident endpoints)");
    const double theta = std::atan2(dy, dx);
    return {d, std::sin(theta), std::cos(theta)};
}

std::vector<EdgeFeature> edge_features(const NetworkTopology& topo, std::span<const DirectedEdge> pairs) {
    std::vector<EdgeFeature> out;
    out.reserve(pairs.size());
    for (const auto& e : pairs) {
        if (e.from == e.to) throw DomainError("edge feature of a degenerate pair (u == v)");
        out.push_back(edge_feature(topo.positions.at(e.from), topo.positions.at(e.to)));
    }
    return out;
}

EdgeList LineGraph::edges() const {
    EdgeList el;
    el.nodes = nodes.size();
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t j = 0; j < nodes.size(); ++j)
            if (adjacent(i, j)) el.add(i, j);
    return el;
}

LineGraph build_line_graph(std::span<const DirectedEdge> edges, std::span<const EdgeFeature> features,
                           LineGraphRule rule) {
    if (features.size() != edges.size()) {
        throw DimensionError("line graph: " + std::to_string(features.size()) + " features for " +
                             std::to_string(edges.size()) + " edges");
    }
    LineGraph lg;
    lg.rule = rule;
    lg.nodes.assign(edges.begin(), edges.end());
    lg.features.assign(features.begin(), features.end());
    const std::size_t n = edges.size();
    lg.adjacency.assign(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const auto& a = edges[i];
            const auto& b = edges[j];
            bool link = a.from == b.from;
            if (rule == LineGraphRule::shared_endpoint) {
                link = link || a.from == b.to || a.to == b.from || a.to == b.to;
            }
            lg.adjacency[i * n + j] = link ? 1 : 0;
        }
    }
    return lg;
}

std::string graph_dump(const CommGraph& graph) {
    nlohmann::ordered_json j;
    j["format"] = "gmarl-graph";
    j["strategy"] = to_string(graph.strategy);
    j["nodes"] = graph.nodes;
    j["directed"] = graph.directed;
    j["weighted"] = graph.weighted;
    j["theta_formula"] = kThetaFormula;
    auto& rows = j["adjacency"] = nlohmann::ordered_json::array();
    for (std::size_t u = 0; u < graph.nodes; ++u) {
        auto row = nlohmann::ordered_json::array();
        for (std::size_t v = 0; v < graph.nodes; ++v) row.push_back(graph.at(u, v));
        rows.push_back(std::move(row));
    }
    return j.dump(1) + "\n";
}

} // namespace gmarl
