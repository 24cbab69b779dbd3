#include "gmarl/scenario.hpp"

#include <cmath>
#include <random>

#include "gmarl/error.hpp"

namespace gmarl {

void Scenario::validate() const {
    radio.validate();
    validate_categories(categories);
    if (topology.size() == 0) throw ConfigError("scenario has no base stations");
    if (lambda.cells != topology.size() || lambda.categories != categories.size()) {
        throw ConfigError("traffic intensity matrix does not match cells x categories");
    }
    if (power.dbm.empty()) throw ConfigError("no power levels configured");
    for (std::size_t i = 1; i < power.dbm.size(); ++i)
        if (!(power.dbm[i] > power.dbm[i - 1])) throw ConfigError("power levels must be strictly ascending");
    if (!(cluster_radius_m > 0.0)) throw ConfigError("cluster radius must be positive");
}

namespace {

std::vector<CategoryProfile> categories_from_config(const Config& c) {
    const auto defaults = default_categories();
    std::vector<double> ber;
    for (const auto& p : defaults) ber.push_back(p.ber_target);
    ber = c.get_doubles("traffic.ber_targets", ber);
    const auto mult = c.get_doubles("traffic.intensity_multipliers", std::vector<double>(ber.size(), 1.0));
    const auto demand = c.get_doubles("traffic.demands", std::vector<double>(ber.size(), 1.0));
    if (mult.size() != ber.size() || demand.size() != ber.size()) {
        throw ConfigError("traffic.intensity_multipliers / traffic.demands need one value per category");
    }
    std::vector<CategoryProfile> out;
    for (std::size_t k = 0; k < ber.size(); ++k) out.push_back({ber[k], mult[k], demand[k]});
    return out;
}

TrafficIntensity lambda_from_config(const Config& c, std::size_t cells, std::size_t categories) {
    const auto matrix = c.get_matrix("traffic.lambda");
    if (!matrix.empty()) {
        if (matrix.size() != cells) {
            throw ConfigError("traffic.lambda has " + std::to_string(matrix.size()) + " rows for " +
                              std::to_string(cells) + " cells");
        }
        TrafficIntensity t{cells, categories, {}};
        for (const auto& row : matrix) {
            if (row.size() != categories) throw ConfigError("traffic.lambda row width must equal the category count");
            t.rates.insert(t.rates.end(), row.begin(), row.end());
        }
        return t;
    }
    const auto per_cat = c.get_doubles("traffic.lambda_per_category", std::vector<double>(categories, 2.0));
    if (per_cat.size() != categories) throw ConfigError("traffic.lambda_per_category needs one value per category");
    TrafficIntensity t{cells, categories, std::vector<double>(cells * categories, 0.0)};
    const double spread = c.get_double("traffic.lambda_spread", 0.0);
    if (spread < 0.0 || spread > 1.0) throw ConfigError("traffic.lambda_spread must lie in [0, 1]");
    std::mt19937_64 rng(c.get_uint("traffic.lambda_seed", 7));
    std::uniform_real_distribution<double> jitter(1.0 - spread, 1.0 + spread);
    for (std::size_t i = 0; i < cells; ++i)
        for (std::size_t k = 0; k < categories; ++k) t.at(i, k) = per_cat[k] * (spread > 0.0 ? jitter(rng) : 1.0);
    return t;
}

} // namespace

Scenario scenario_from_config(const Config& c) {
    Scenario s;
    if (c.has("topology.file")) {
        s.topology = load_topology(c.get_string("topology.file", ""));
    } else if (c.has("topology.positions")) {
        const auto b = c.get_doubles("topology.bounds", {0.0, 0.0, 3000.0, 3000.0});
        if (b.size() != 4) throw ConfigError("topology.bounds needs x_min, y_min, x_max, y_max");
        s.topology.bounds = {b[0], b[1], b[2], b[3]};
        for (const auto& row : c.get_matrix("topology.positions")) {
            if (row.size() != 2) throw ConfigError("topology.positions rows need x, y");
            const Point p{row[0], row[1]};
            if (!s.topology.bounds.contains(p)) throw ConfigError("topology.positions entry outside topology.bounds");
            s.topology.positions.push_back(p);
        }
    } else {
        const auto b = c.get_doubles("topology.bounds", {0.0, 0.0, 3000.0, 3000.0});
        if (b.size() != 4) throw ConfigError("topology.bounds needs x_min, y_min, x_max, y_max");
        const auto cells = c.get_int("topology.cells", 11);
        if (cells <= 0) throw ConfigError("topology.cells must be positive");
        s.topology = generate_topology(static_cast<std::size_t>(cells), {b[0], b[1], b[2], b[3]},
                                       c.get_double("topology.min_separation_m", 500.0),
                                       c.get_uint("topology.seed", 1));
    }

    s.radio.bandwidth_hz = c.get_double("radio.bandwidth_hz", s.radio.bandwidth_hz);
    s.radio.carrier_ghz = c.get_double("radio.carrier_ghz", s.radio.carrier_ghz);
    s.radio.noise_figure_db = c.get_double("radio.noise_figure_db", s.radio.noise_figure_db);
    s.radio.bs_height_m = c.get_double("radio.bs_height_m", s.radio.bs_height_m);
    s.radio.ue_height_m = c.get_double("radio.ue_height_m", s.radio.ue_height_m);
    s.radio.path_loss = path_loss_model_from_string(c.get_string("radio.path_loss", to_string(s.radio.path_loss)));
    s.radio.shadowing_sigma_db = c.get_double("radio.shadowing_sigma_db", 0.0);
    if (c.has("radio.mcs_orders")) {
        s.radio.mcs_orders.clear();
        for (double m : c.get_doubles("radio.mcs_orders", {})) s.radio.mcs_orders.push_back(static_cast<int>(m));
    }

    s.categories = categories_from_config(c);
    s.lambda = lambda_from_config(c, s.topology.size(), s.categories.size());
    s.cluster_radius_m = c.get_double("traffic.cluster_radius_m", s.cluster_radius_m);
    s.fixed_users = c.get_bool("traffic.fixed_users", false);
    s.fixed_user_seed = c.get_uint("traffic.fixed_user_seed", 0);

    s.grid.distance_bins = static_cast<std::size_t>(c.get_int("grid.distance_bins", 8));
    s.grid.angle_bins = static_cast<std::size_t>(c.get_int("grid.angle_bins", 12));
    s.grid.max_radius_m = c.get_double("grid.max_radius_m", 1500.0);
    s.feature_scale = c.get_double("features.scale", 1.0);

    s.power.dbm = c.get_doubles("power.levels_dbm", s.power.dbm);

    s.graph.binary_range_m = c.get_double("graph.binary_range_m", s.graph.binary_range_m);
    s.graph.distance_scale_m = c.get_double("graph.distance_scale_m", s.graph.distance_scale_m);
    s.graph.probe_spacing_m = c.get_double("graph.probe_spacing_m", s.graph.probe_spacing_m);
    s.graph.line_graph_rule = line_graph_rule_from_string(
        c.get_string("graph.line_graph_rule", to_string(s.graph.line_graph_rule)));

    s.validate();
    return s;
}

UserSet RadioEnv::sample(std::uint64_t traffic_seed) const {
    const auto& s = *scenario_;
    return sample_users(s.topology, s.categories, s.lambda, s.cluster_radius_m,
                        s.fixed_users ? s.fixed_user_seed : traffic_seed, s.radio.shadowing_sigma_db);
}

std::vector<ObservationTensor> RadioEnv::observe(const UserSet& users) const {
    return gmarl::observe(scenario_->topology, users, scenario_->grid, scenario_->categories.size());
}

Tensor RadioEnv::features(const UserSet& users) const {
    const auto obs = observe(users);
    return node_features(obs, scenario_->feature_scale);
}

StepResult RadioEnv::step(const UserSet& users, std::span<const std::size_t> levels) const {
    const auto& s = *scenario_;
    return gmarl::step(s.topology, users, make_action(levels, s.power), s.radio, s.categories);
}

} // namespace gmarl
