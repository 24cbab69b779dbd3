#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace gmarl {

double mean(std::span<const double> values);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_std(std::span<const double> values);

inline constexpr double kZ99 = 2.576;

/// 2.576 * sd / sqrt(n).
double ci99_half_width(std::span<const double> values);

struct PairedTest {
    double mean_diff = 0.0;
    double t = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

/// One-sided paired t-test of H1: mean(a - b) > 0.
PairedTest paired_t_greater(std::span<const double> a, std::span<const double> b);

/// Zero when either vector has zero norm.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct Perturbation {
    bool feasible = false;
    std::vector<double> values;
    double cosine = 0.0;
};

/// Moves `base` along the great circle toward a random non-negative direction
/// until cos(base, result) hits `target` within `tolerance`, then rescales the
/// result to the total mass of `base`. Infeasible when no sampled direction
/// makes the target reachable.
Perturbation perturb_to_cosine(std::span<const double> base, double target, std::uint64_t seed,
                               double tolerance = 0.01, std::size_t attempts = 2000);

} // namespace gmarl
