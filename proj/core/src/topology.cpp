#include "gmarl/topology.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gmarl/error.hpp"

namespace gmarl {

double distance(const Point& a, const Point& b) { return std::hypot(b.x - a.x, b.y - a.y); }

NetworkTopology generate_topology(std::size_t count, const Bounds& bounds, double min_separation_m,
                                  std::uint64_t seed, std::size_t retry_cap) {
    if (count == 0) throw PlacementError("topology needs at least one base station");
    if (!(bounds.width() >= 0.0) || !(bounds.height() >= 0.0)) throw PlacementError("invalid bounds");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(bounds.x_min, bounds.x_max);
    std::uniform_real_distribution<double> uy(bounds.y_min, bounds.y_max);

    NetworkTopology topo;
    topo.bounds = bounds;
    std::size_t failures = 0;
    while (topo.positions.size() < count) {
        const Point p{ux(rng), uy(rng)};
        bool ok = true;
        for (const auto& q : topo.positions) {
            const double d = distance(p, q);
            if (d < min_separation_m || d == 0.0) {
                ok = false;
                break;
            }
        }
        if (ok) {
            topo.positions.push_back(p);
            failures = 0;
        } else if (++failures >= retry_cap) {
            throw PlacementError("could not place " + std::to_string(count) + " sites " +
                                 std::to_string(min_separation_m) + " m apart after " + std::to_string(retry_cap) +
                                 " consecutive rejections (placed " + std::to_string(topo.positions.size()) + ")");
        }
    }
    return topo;
}

std::vector<Point> lattice(const Bounds& bounds, double spacing_m) {
    if (!(spacing_m > 0.0)) throw PlacementError("lattice spacing must be positive");
    std::vector<Point> pts;
    const auto nx = static_cast<std::size_t>(std::floor(bounds.width() / spacing_m + 1e-9)) + 1;
    const auto ny = static_cast<std::size_t>(std::floor(bounds.height() / spacing_m + 1e-9)) + 1;
    pts.reserve(nx * ny);
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i)
            pts.push_back({bounds.x_min + double(i) * spacing_m, bounds.y_min + double(j) * spacing_m});
    return pts;
}

std::string topology_to_string(const NetworkTopology& topo) {
    nlohmann::ordered_json j;
    j["format"] = "gmarl-topology";
    j["count"] = topo.size();
    j["bounds"] = {{"x_min", topo.bounds.x_min},
                   {"y_min", topo.bounds.y_min},
                   {"x_max", topo.bounds.x_max},
                   {"y_max", topo.bounds.y_max}};
    auto& pos = j["positions_m"] = nlohmann::ordered_json::array();
    for (const auto& p : topo.positions) pos.push_back({p.x, p.y});
    return j.dump(1) + "\n";
}

NetworkTopology topology_from_string(const std::string& text) {
    NetworkTopology topo;
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.value("format", "") != "gmarl-topology") throw IoError("not a gmarl topology file");
        const auto& b = j.at("bounds");
        topo.bounds = {b.at("x_min").get<double>(), b.at("y_min").get<double>(), b.at("x_max").get<double>(),
                       b.at("y_max").get<double>()};
        for (const auto& p : j.at("positions_m")) topo.positions.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        if (j.at("count").get<std::size_t>() != topo.positions.size()) {
            throw IoError("topology count does not match the number of positions");
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed topology: ") + e.what());
    }
    std::set<std::pair<double, double>> seen;
    for (const auto& p : topo.positions) {
        if (!topo.bounds.contains(p)) throw IoError("topology position outside bounds");
        if (!seen.emplace(p.x, p.y).second) throw IoError("duplicate topology position");
    }
    return topo;
}

void save_topology(const std::filesystem::path& path, const NetworkTopology& topo) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << topology_to_string(topo);
}

NetworkTopology load_topology(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open topology '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return topology_from_string(buf.str());
}

} // namespace gmarl
