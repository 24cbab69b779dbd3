#include "gmarl/radio.hpp"

#include <algorithm>
#include <cmath>

#include "gmarl/error.hpp"

namespace gmarl {

std::string to_string(PathLossModel model) {
    switch (model) {
    case PathLossModel::uma_los: return "3gpp-uma-los";
    }
    return "unknown";
}

PathLossModel path_loss_model_from_string(const std::string& name) {
    if (name == "3gpp-uma-los" || name == "uma" || name == "uma_los") return PathLossModel::uma_los;
    throw ConfigError("unknown path-loss model '" + name + "'");
}

namespace {

int constellation_side(int order) {
    const int side = static_cast<int>(std::lround(std::sqrt(double(order))));
    if (order < 4 || side * side != order) {
        throw ConfigError("MCS order " + std::to_string(order) + " is not a square QAM constellation");
    }
    return side;
}

} // namespace

void RadioParams::validate() const {
    if (!(bandwidth_hz > 0.0)) throw ConfigError("bandwidth must be positive");
    if (!(carrier_ghz > 0.0)) throw ConfigError("carrier frequency must be positive");
    if (!(bs_height_m > 1.0) || !(ue_height_m > 1.0)) {
        throw ConfigError("BS and UE heights must exceed the 1 m environment height");
    }
    if (mcs_orders.empty()) throw ConfigError("MCS order set is empty");
    for (std::size_t i = 0; i < mcs_orders.size(); ++i) {
        constellation_side(mcs_orders[i]);
        if (i && mcs_orders[i] <= mcs_orders[i - 1]) throw ConfigError("MCS orders must be strictly ascending");
    }
    if (shadowing_sigma_db < 0.0) throw ConfigError("shadowing sigma must be non-negative");
}

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watt_to_dbm(double watt) { return 10.0 * std::log10(watt) + 30.0; }

double breakpoint_distance_m(const RadioParams& params) {
    const double h_bs = params.bs_height_m - 1.0;
    const double h_ut = params.ue_height_m - 1.0;
    return 4.0 * h_bs * h_ut * params.carrier_ghz * 1e9 / kSpeedOfLight;
}

double path_loss_db(double distance_2d_m, const RadioParams& params) {
    const double d2d = std::max(distance_2d_m, 1.0);
    const double dh = params.bs_height_m - params.ue_height_m;
    const double d3d = std::sqrt(d2d * d2d + dh * dh);
    const double fc = params.carrier_ghz;
    const double d_bp = breakpoint_distance_m(params);
    if (d2d <= d_bp) return 28.0 + 22.0 * std::log10(d3d) + 20.0 * std::log10(fc);
    return 28.0 + 40.0 * std::log10(d3d) + 20.0 * std::log10(fc) - 9.0 * std::log10(d_bp * d_bp + dh * dh);
}

double rx_power_w(double tx_dbm, double distance_2d_m, const RadioParams& params, double shadowing_db) {
    return dbm_to_watt(tx_dbm - path_loss_db(distance_2d_m, params) - shadowing_db);
}

double noise_power_w(const RadioParams& params) {
    return dbm_to_watt(kThermalNoiseDbmPerHz + 10.0 * std::log10(params.bandwidth_hz) + params.noise_figure_db);
}

double ber_mqam(int side, double gamma) {
    if (side < 2) throw DomainError("constellation side must be >= 2");
    if (gamma < 0.0) throw DomainError("SINR must be non-negative");
    const double l = side;
    const double m = l * l;
    return (1.0 / std::log2(l)) * ((l - 1.0) / l) * std::erfc(std::sqrt(3.0 * gamma / (2.0 * (m - 1.0))));
}

double select_mcs(double gamma, double ber_target, std::span<const int> orders) {
    for (auto it = orders.rbegin(); it != orders.rend(); ++it) {
        if (ber_mqam(constellation_side(*it), gamma) <= ber_target) return std::log2(double(*it));
    }
    return 0.0;
}

} // namespace gmarl
