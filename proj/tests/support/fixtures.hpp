#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "gmarl/policy.hpp"
#include "gmarl/scenario.hpp"

namespace gmarl::testing {

/// Scenario over explicit sites with a margin around them and unit rates.
inline Scenario scenario_at(std::vector<Point> cells, std::vector<double> power_dbm = {34.0, 40.0, 46.0}) {
    Scenario s;
    double x0 = cells[0].x, x1 = cells[0].x, y0 = cells[0].y, y1 = cells[0].y;
    for (const auto& p : cells) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    s.topology.bounds = {x0 - 1000.0, y0 - 1000.0, x1 + 1000.0, y1 + 1000.0};
    s.topology.positions = std::move(cells);
    s.lambda = TrafficIntensity::uniform(s.topology.size(), s.categories.size(), 1.0);
    s.power.dbm = std::move(power_dbm);
    return s;
}

inline std::vector<Point> triangle_sites() { return {{0.0, 0.0}, {800.0, 0.0}, {300.0, 700.0}}; }

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = u(rng);
    return t;
}

/// Randomises every parameter (including biases) so no gradient vanishes by symmetry.
inline void randomize(ParamStore& params, std::uint64_t seed, double scale = 0.5) {
    std::mt19937_64 rng(seed);
    for (const auto& name : params.names()) params.set(name, random_tensor(params.get(name).shape(), rng, -scale, scale));
}

inline PolicySpec small_spec(Strategy s, std::size_t input_dim, std::size_t actions, std::size_t hidden = 5) {
    PolicySpec spec;
    spec.strategy = s;
    spec.gnn.hidden = hidden;
    spec.aux.hidden = 4;
    spec.input_dim = input_dim;
    spec.actions = actions;
    return spec;
}

} // namespace gmarl::testing
