#pragma once

#include <cstdint>
#include <vector>

#include "gmarl/config.hpp"
#include "gmarl/graph.hpp"
#include "gmarl/radio_env.hpp"

namespace gmarl {

struct GraphParams {
    /// Range D of binary edges; also bounds the learned-edge candidate set.
    double binary_range_m = 1500.0;
    double distance_scale_m = 500.0;
    double probe_spacing_m = 100.0;
    LineGraphRule line_graph_rule = LineGraphRule::shared_origin;
};

/// Everything needed to simulate one network: layout, radio, traffic, observation grid.
struct Scenario {
    NetworkTopology topology;
    RadioParams radio;
    std::vector<CategoryProfile> categories = default_categories();
    TrafficIntensity lambda;
    double cluster_radius_m = 600.0;
    GridSpec grid;
    PowerLevels power;
    GraphParams graph;
    double feature_scale = 1.0;
    /// When set, every episode reuses the user draw of `fixed_user_seed`.
    bool fixed_users = false;
    std::uint64_t fixed_user_seed = 0;

    std::size_t agents() const { return topology.size(); }
    std::size_t feature_dim() const { return grid.distance_bins * grid.angle_bins * categories.size(); }
    void validate() const;
};

/// Builds a scenario from flat config keys (topology.*, radio.*, traffic.*,
/// grid.*, power.*, graph.*, features.*). Unset keys keep their defaults.
Scenario scenario_from_config(const Config& config);

/// Per-episode simulator view over a scenario.
class RadioEnv {
public:
    explicit RadioEnv(const Scenario& scenario) : scenario_(&scenario) {}

    const Scenario& scenario() const { return *scenario_; }
    UserSet sample(std::uint64_t traffic_seed) const;
    std::vector<ObservationTensor> observe(const UserSet& users) const;
    Tensor features(const UserSet& users) const;
    StepResult step(const UserSet& users, std::span<const std::size_t> levels) const;

private:
    const Scenario* scenario_;
};

} // namespace gmarl
