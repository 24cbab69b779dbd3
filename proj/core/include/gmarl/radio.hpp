#pragma once

#include <span>
#include <string>
#include <vector>

namespace gmarl {

enum class PathLossModel { uma_los };

std::string to_string(PathLossModel model);
PathLossModel path_loss_model_from_string(const std::string& name);

struct RadioParams {
    double bandwidth_hz = 60e6;
    double carrier_ghz = 3.7;
    double noise_figure_db = 9.0;
    double bs_height_m = 25.0;
    double ue_height_m = 1.5;
    PathLossModel path_loss = PathLossModel::uma_los;
    /// Square QAM constellation sizes, ascending.
    std::vector<int> mcs_orders{4, 16, 64, 256};
    /// Lognormal shadowing standard deviation; 0 disables it.
    double shadowing_sigma_db = 0.0;

    void validate() const;
};

constexpr double kSpeedOfLight = 299792458.0;
constexpr double kThermalNoiseDbmPerHz = -174.0;

double dbm_to_watt(double dbm);
double watt_to_dbm(double watt);

/// Effective-height breakpoint distance of the UMa model (1 m environment height).
double breakpoint_distance_m(const RadioParams& params);

/// 3GPP TR 38.901 UMa LOS path loss in dB. 2D distances below 1 m are clamped to 1 m.
double path_loss_db(double distance_2d_m, const RadioParams& params);

/// Received power in watts for a transmitter at `tx_dbm`.
double rx_power_w(double tx_dbm, double distance_2d_m, const RadioParams& params, double shadowing_db = 0.0);

/// Thermal noise plus receiver noise figure over the system bandwidth, in watts.
double noise_power_w(const RadioParams& params);

/// Bit error rate of Gray-coded square M-QAM with side L (M = L^2) at linear
/// SINR `gamma`, union-bound approximation.
double ber_mqam(int side, double gamma);

/// Spectral efficiency log2(M) of the largest order in `orders` whose BER at
/// `gamma` meets `ber_target`; 0 when no order qualifies.
double select_mcs(double gamma, double ber_target, std::span<const int> orders);

} // namespace gmarl
