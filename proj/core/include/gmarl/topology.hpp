#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gmarl {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

double distance(const Point& a, const Point& b);

/// Axis-aligned scenario area in meters.
struct Bounds {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    bool contains(const Point& p) const { return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max; }

    friend bool operator==(const Bounds&, const Bounds&) = default;
};

/// Base-station layout. Positions are pairwise distinct and inside `bounds`.
struct NetworkTopology {
    std::vector<Point> positions;
    Bounds bounds;

    std::size_t size() const { return positions.size(); }

    friend bool operator==(const NetworkTopology&, const NetworkTopology&) = default;
};

/// Rejection sampling of `count` sites at least `min_separation_m` apart.
/// Throws PlacementError when `retry_cap` consecutive draws fail.
NetworkTopology generate_topology(std::size_t count, const Bounds& bounds, double min_separation_m,
                                  std::uint64_t seed, std::size_t retry_cap = 100000);

/// Regular lattice with the given spacing covering `bounds` (edges included).
std::vector<Point> lattice(const Bounds& bounds, double spacing_m);

std::string topology_to_string(const NetworkTopology& topo);
NetworkTopology topology_from_string(const std::string& text);
void save_topology(const std::filesystem::path& path, const NetworkTopology& topo);
NetworkTopology load_topology(const std::filesystem::path& path);

} // namespace gmarl
