#include "gmarl/radio_env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "gmarl/error.hpp"

namespace gmarl {

std::vector<CategoryProfile> default_categories() { return {{1e-2, 1.0, 1.0}, {1e-3, 1.0, 1.0}, {1e-5, 1.0, 1.0}}; }

void validate_categories(std::span<const CategoryProfile> profiles) {
    if (profiles.empty()) throw ConfigError("at least one user category is required");
    for (std::size_t k = 0; k < profiles.size(); ++k) {
        if (!(profiles[k].ber_target > 0.0 && profiles[k].ber_target < 1.0)) {
            throw ConfigError("BER target of category " + std::to_string(k) + " must lie in (0, 1)");
        }
        if (k && !(profiles[k].ber_target < profiles[k - 1].ber_target)) {
            throw ConfigError("BER targets must be strictly decreasing across categories");
        }
        if (profiles[k].intensity_multiplier < 0.0 || profiles[k].traffic_demand < 0.0) {
            throw ConfigError("category multipliers and demands must be non-negative");
        }
    }
}

TrafficIntensity TrafficIntensity::uniform(std::size_t cells, std::size_t categories, double rate) {
    return {cells, categories, std::vector<double>(cells * categories, rate)};
}

double TrafficIntensity::total() const {
    double s = 0.0;
    for (double r : rates) s += r;
    return s;
}

UserSet sample_users(const NetworkTopology& topo, std::span<const CategoryProfile> profiles,
                     const TrafficIntensity& lambda, double cluster_radius_m, std::uint64_t seed,
                     double shadowing_sigma_db) {
    if (lambda.cells != topo.size() || lambda.categories != profiles.size() ||
        lambda.rates.size() != lambda.cells * lambda.categories) {
        throw DimensionError("traffic intensity is " + std::to_string(lambda.cells) + "x" +
                             std::to_string(lambda.categories) + ", scenario has " + std::to_string(topo.size()) +
                             " cells and " + std::to_string(profiles.size()) + " categories");
    }
    for (double r : lambda.rates)
        if (!(r >= 0.0)) throw ConfigError("traffic intensities must be non-negative");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> shadow(0.0, shadowing_sigma_db > 0.0 ? shadowing_sigma_db : 1.0);
    UserSet users;
    for (std::size_t i = 0; i < topo.size(); ++i) {
        for (std::size_t k = 0; k < profiles.size(); ++k) {
            const double mean = lambda.at(i, k) * profiles[k].intensity_multiplier;
            if (mean <= 0.0) continue;
            const int count = std::poisson_distribution<int>(mean)(rng);
            for (int c = 0; c < count; ++c) {
                const double r = cluster_radius_m * std::sqrt(unit(rng));
                const double phi = 2.0 * std::numbers::pi * unit(rng);
                User u;
                u.position = {topo.positions[i].x + r * std::cos(phi), topo.positions[i].y + r * std::sin(phi)};
                u.category = k;
                u.demand = profiles[k].traffic_demand;
                u.parent_cell = i;
                u.serving_cell = i;
                if (shadowing_sigma_db > 0.0) {
                    u.shadowing_db.resize(topo.size());
                    for (auto& s : u.shadowing_db) s = shadow(rng);
                }
                users.push_back(std::move(u));
            }
        }
    }
    return users;
}

double PowerLevels::average_dbm() const {
    if (dbm.empty()) throw ConfigError("no power levels configured");
    double s = 0.0;
    for (double p : dbm) s += p;
    return s / double(dbm.size());
}

double PowerLevels::max_dbm() const {
    if (dbm.empty()) throw ConfigError("no power levels configured");
    return *std::max_element(dbm.begin(), dbm.end());
}

ActionVector make_action(std::span<const std::size_t> levels, const PowerLevels& power) {
    ActionVector a;
    a.levels.assign(levels.begin(), levels.end());
    for (auto l : levels) {
        if (l >= power.size()) {
            throw IndexError("power level " + std::to_string(l) + " out of range for " + std::to_string(power.size()) +
                             " levels");
        }
        a.tx_dbm.push_back(power.dbm[l]);
    }
    return a;
}

namespace {

void check_action(const NetworkTopology& topo, const ActionVector& action) {
    if (action.tx_dbm.size() != topo.size()) {
        throw DimensionError("action has " + std::to_string(action.tx_dbm.size()) + " entries for " +
                             std::to_string(topo.size()) + " cells");
    }
}

double link_rx(const User& u, std::size_t cell, const NetworkTopology& topo, const ActionVector& action,
               const RadioParams& radio) {
    const double shadow = u.shadowing_db.empty() ? 0.0 : u.shadowing_db[cell];
    return rx_power_w(action.tx_dbm[cell], distance(u.position, topo.positions[cell]), radio, shadow);
}

// Association and SINR from one pass over the links.
void associate_and_measure(UserSet& users, const NetworkTopology& topo, const ActionVector& action,
                           const RadioParams& radio, bool reassign) {
    check_action(topo, action);
    const double noise = noise_power_w(radio);
    std::vector<double> rx(topo.size());
    for (auto& u : users) {
        double total = 0.0;
        std::size_t best = 0;
        for (std::size_t i = 0; i < topo.size(); ++i) {
            rx[i] = link_rx(u, i, topo, action, radio);
            total += rx[i];
            if (rx[i] > rx[best]) best = i;
        }
        if (reassign) u.serving_cell = best;
        if (u.serving_cell >= topo.size()) throw IndexError("user serving cell out of range");
        const double signal = rx[u.serving_cell];
        u.sinr = signal / (total - signal + noise);
    }
}

} // namespace

void assign_serving(UserSet& users, const NetworkTopology& topo, const ActionVector& action,
                    const RadioParams& radio) {
    check_action(topo, action);
    for (auto& u : users) {
        std::size_t best = 0;
        double best_rx = -1.0;
        for (std::size_t i = 0; i < topo.size(); ++i) {
            const double rx = link_rx(u, i, topo, action, radio);
            if (rx > best_rx) {
                best_rx = rx;
                best = i;
            }
        }
        u.serving_cell = best;
    }
}

void compute_sinr(UserSet& users, const NetworkTopology& topo, const ActionVector& action,
                  const RadioParams& radio) {
    associate_and_measure(users, topo, action, radio, false);
}

double normalize_reward(double reward_bps, std::size_t user_count, const RadioParams& radio) {
    if (user_count == 0) return 0.0;
    const double max_eta = std::log2(double(radio.mcs_orders.back()));
    return reward_bps / (radio.bandwidth_hz * double(user_count) * max_eta);
}

StepResult step(const NetworkTopology& topo, const UserSet& users, const ActionVector& action,
                const RadioParams& radio, std::span<const CategoryProfile> profiles) {
    StepResult out;
    out.users = users;
    associate_and_measure(out.users, topo, action, radio, true);
    out.cell_load.assign(topo.size(), 0);
    for (const auto& u : out.users) ++out.cell_load[u.serving_cell];
    for (auto& u : out.users) {
        if (u.category >= profiles.size()) throw IndexError("user category out of range");
        u.spectral_efficiency = select_mcs(u.sinr, profiles[u.category].ber_target, radio.mcs_orders);
        u.bandwidth_hz = radio.bandwidth_hz / double(out.cell_load[u.serving_cell]);
        out.reward_bps += u.spectral_efficiency * u.bandwidth_hz;
    }
    out.normalized_reward = normalize_reward(out.reward_bps, out.users.size(), radio);
    return out;
}

double ObservationTensor::total() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

std::vector<ObservationTensor> observe(const NetworkTopology& topo, const UserSet& users, const GridSpec& grid,
                                       std::size_t categories) {
    if (grid.distance_bins == 0 || grid.angle_bins == 0) throw ConfigError("grid needs at least one bin per axis");
    if (!(grid.max_radius_m > 0.0)) throw ConfigError("grid radius must be positive");
    const double ring = grid.max_radius_m / double(grid.distance_bins);
    const double sector = 2.0 * std::numbers::pi / double(grid.angle_bins);
    std::vector<ObservationTensor> out;
    out.reserve(topo.size());
    for (const auto& bs : topo.positions) {
        ObservationTensor obs{grid.distance_bins, grid.angle_bins, categories,
                              std::vector<double>(grid.distance_bins * grid.angle_bins * categories, 0.0)};
        for (const auto& u : users) {
            if (u.category >= categories) throw IndexError("user category out of range");
            const double dx = u.position.x - bs.x;
            const double dy = u.position.y - bs.y;
            const double d = std::hypot(dx, dy);
            if (d >= grid.max_radius_m) continue;
            double phi = std::atan2(dy, dx);
            if (phi < 0.0) phi += 2.0 * std::numbers::pi;
            const auto db = std::min(grid.distance_bins - 1, static_cast<std::size_t>(d / ring));
            const auto ab = std::min(grid.angle_bins - 1, static_cast<std::size_t>(phi / sector));
            obs.values[(db * grid.angle_bins + ab) * categories + u.category] += u.demand;
        }
        out.push_back(std::move(obs));
    }
    return out;
}

Tensor node_features(std::span<const ObservationTensor> obs, double scale) {
    if (obs.empty()) throw DimensionError("node_features: no observations");
    const std::size_t f = obs.front().values.size();
    Tensor x({obs.size(), f});
    for (std::size_t v = 0; v < obs.size(); ++v) {
        if (obs[v].values.size() != f) throw DimensionError("node_features: ragged observations");
        for (std::size_t j = 0; j < f; ++j) x.at(v, j) = scale * obs[v].values[j];
    }
    return x;
}

} // namespace gmarl
