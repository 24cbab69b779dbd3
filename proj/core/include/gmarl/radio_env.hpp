#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gmarl/radio.hpp"
#include "gmarl/tensor.hpp"
#include "gmarl/topology.hpp"

namespace gmarl {

/// Service category: a BER requirement plus traffic shaping knobs.
struct CategoryProfile {
    double ber_target = 1e-3;
    double intensity_multiplier = 1.0;
    double traffic_demand = 1.0;
};

/// Default three categories with increasingly strict BER targets.
std::vector<CategoryProfile> default_categories();

/// Throws ConfigError unless BER targets are strictly decreasing and positive.
void validate_categories(std::span<const CategoryProfile> profiles);

/// Per-cell, per-category Poisson intensities (mean users per episode), M x S.
struct TrafficIntensity {
    std::size_t cells = 0;
    std::size_t categories = 0;
    std::vector<double> rates;

    static TrafficIntensity uniform(std::size_t cells, std::size_t categories, double rate);
    double at(std::size_t cell, std::size_t category) const { return rates[cell * categories + category]; }
    double& at(std::size_t cell, std::size_t category) { return rates[cell * categories + category]; }
    double total() const;
};

struct User {
    Point position;
    std::size_t category = 0;
    double demand = 1.0;
    std::size_t parent_cell = 0;
    std::size_t serving_cell = 0;
    double sinr = 0.0;
    double spectral_efficiency = 0.0;
    double bandwidth_hz = 0.0;
    /// Per-cell shadowing in dB; empty when shadowing is disabled.
    std::vector<double> shadowing_db;
};

using UserSet = std::vector<User>;

/// Matern-cluster draw: for every cell i and category k, Poisson(lambda(i,k) *
/// multiplier_k) users uniform in the disk of `cluster_radius_m` around cell i.
UserSet sample_users(const NetworkTopology& topo, std::span<const CategoryProfile> profiles,
                     const TrafficIntensity& lambda, double cluster_radius_m, std::uint64_t seed,
                     double shadowing_sigma_db = 0.0);

/// Discrete transmit power levels in dBm, ascending.
struct PowerLevels {
    std::vector<double> dbm{34.0, 37.0, 40.0, 43.0, 46.0};

    std::size_t size() const { return dbm.size(); }
    double average_dbm() const;
    double max_dbm() const;
};

struct ActionVector {
    std::vector<std::size_t> levels;
    std::vector<double> tx_dbm;
};

ActionVector make_action(std::span<const std::size_t> levels, const PowerLevels& power);

/// Best server by received power at the action's powers; ties go to the lowest index.
void assign_serving(UserSet& users, const NetworkTopology& topo, const ActionVector& action,
                    const RadioParams& radio);

/// Linear SINR at each user's serving cell; every other cell interferes.
void compute_sinr(UserSet& users, const NetworkTopology& topo, const ActionVector& action,
                  const RadioParams& radio);

struct StepResult {
    UserSet users;
    std::vector<std::size_t> cell_load;
    double reward_bps = 0.0;
    double normalized_reward = 0.0;
};

/// Applies a joint power action: association, SINR, per-category MCS and an
/// equal bandwidth share per serving cell. Reward is the sum of eta * B_l.
StepResult step(const NetworkTopology& topo, const UserSet& users, const ActionVector& action,
                const RadioParams& radio, std::span<const CategoryProfile> profiles);

/// reward / (B * user_count * log2(max order)); 0 for an empty user set.
double normalize_reward(double reward_bps, std::size_t user_count, const RadioParams& radio);

/// Polar grid around each agent: m distance rings up to max_radius and n
/// angular sectors starting at angle 0.
struct GridSpec {
    std::size_t distance_bins = 8;
    std::size_t angle_bins = 12;
    double max_radius_m = 1500.0;
};

struct ObservationTensor {
    std::size_t distance_bins = 0;
    std::size_t angle_bins = 0;
    std::size_t categories = 0;
    std::vector<double> values;

    double at(std::size_t d, std::size_t a, std::size_t k) const {
        return values[(d * angle_bins + a) * categories + k];
    }
    double total() const;
};

std::vector<ObservationTensor> observe(const NetworkTopology& topo, const UserSet& users, const GridSpec& grid,
                                       std::size_t categories);

/// Stacks flattened observations into node features [V x m*n*S], multiplied by `scale`.
Tensor node_features(std::span<const ObservationTensor> obs, double scale = 1.0);

} // namespace gmarl
