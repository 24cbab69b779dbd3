#include "gmarl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <boost/math/distributions/students_t.hpp>

#include "gmarl/error.hpp"

namespace gmarl {

double mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / double(values.size());
}

double sample_std(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    const double m = mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / double(values.size() - 1));
}

double ci99_half_width(std::span<const double> values) {
    if (values.empty()) return 0.0;
    return kZ99 * sample_std(values) / std::sqrt(double(values.size()));
}

PairedTest paired_t_greater(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("paired test needs samples of equal length");
    PairedTest out;
    out.n = a.size();
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    out.mean_diff = mean(d);
    if (d.size() < 2) {
        out.p_value = out.mean_diff > 0.0 ? 0.0 : 1.0;
        return out;
    }
    const double se = sample_std(d) / std::sqrt(double(d.size()));
    if (se == 0.0) {
        out.t = out.mean_diff > 0.0 ? INFINITY : (out.mean_diff < 0.0 ? -INFINITY : 0.0);
        out.p_value = out.mean_diff > 0.0 ? 0.0 : 1.0;
        return out;
    }
    out.t = out.mean_diff / se;
    const boost::math::students_t dist(double(d.size() - 1));
    out.p_value = boost::math::cdf(boost::math::complement(dist, out.t));
    return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("cosine similarity needs vectors of equal length");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

namespace {

std::vector<double> unit(std::span<const double> v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    std::vector<double> out(v.begin(), v.end());
    for (double& x : out) x /= n;
    return out;
}

std::vector<double> slerp(const std::vector<double>& u, const std::vector<double>& d, double omega, double t) {
    const double s = std::sin(omega);
    const double cu = std::sin((1.0 - t) * omega) / s;
    const double cd = std::sin(t * omega) / s;
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = cu * u[i] + cd * d[i];
    return out;
}

} // namespace

Perturbation perturb_to_cosine(std::span<const double> base, double target, std::uint64_t seed, double tolerance,
                               std::size_t attempts) {
    Perturbation out;
    if (base.empty()) throw DimensionError("cannot perturb an empty vector");
    double mass = 0.0;
    for (double v : base) {
        if (v < 0.0 || !std::isfinite(v)) throw DomainError("base vector must be finite and non-negative");
        mass += v;
    }
    if (mass == 0.0 || !(target <= 1.0) || target < 0.0) return out;

    const auto u = unit(base);
    auto rescale = [&](std::vector<double> v) {
        double s = std::accumulate(v.begin(), v.end(), 0.0);
        for (double& x : v) x = std::max(0.0, x) * mass / s;
        return v;
    };
    if (target >= 1.0 - 1e-15) {
        out.feasible = true;
        out.values.assign(base.begin(), base.end());
        out.cosine = 1.0;
        return out;
    }

    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> expo(1.0);
    for (std::size_t a = 0; a < attempts; ++a) {
        // Heavy-tailed entries spread the directions over the non-negative orthant.
        std::vector<double> d(base.size());
        for (double& x : d) x = std::pow(expo(rng), 4.0);
        const auto dh = unit(d);
        const double c = std::clamp(cosine_similarity(u, dh), -1.0, 1.0);
        if (c > target) continue;
        const double omega = std::acos(c);
        if (omega < 1e-12) continue;
        double lo = 0.0, hi = 1.0;
        std::vector<double> v;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            v = slerp(u, dh, omega, mid);
            if (cosine_similarity(u, v) > target) lo = mid; else hi = mid;
        }
        v = rescale(std::move(v));
        const double got = cosine_similarity(base, v);
        if (std::abs(got - target) <= tolerance) {
            out.feasible = true;
            out.values = std::move(v);
            out.cosine = got;
            return out;
        }
    }
    return out;
}

} // namespace gmarl
