#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "gmarl/tensor.hpp"

namespace gmarl::testing {

/// Central differences of a scalar function of the parameter store.
inline Gradients finite_difference(const ParamStore& params, const std::function<double(const ParamStore&)>& f,
                                   double step = 1e-5) {
    Gradients out;
    ParamStore work = params;
    for (const auto& name : params.names()) {
        Tensor base = params.get(name);
        Tensor g = Tensor::zeros_like(base);
        for (std::size_t i = 0; i < base.size(); ++i) {
            Tensor t = base;
            t[i] = base[i] + step;
            work.set(name, t);
            const double up = f(work);
            t[i] = base[i] - step;
            work.set(name, t);
            const double down = f(work);
            g[i] = (up - down) / (2.0 * step);
        }
        work.set(name, base);
        out.emplace(name, std::move(g));
    }
    return out;
}

struct GradCheck {
    double max_rel_error = 0.0;
    std::string worst;
};

/// Per tensor: max|analytic - numeric| / max(max|numeric|, floor). Worst over tensors.
inline GradCheck compare_gradients(const Gradients& analytic, const Gradients& numeric, double floor = 1e-8) {
    GradCheck out;
    for (const auto& [name, num] : numeric) {
        const Tensor& ana = analytic.at(name);
        double diff = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < num.size(); ++i) {
            diff = std::max(diff, std::abs(ana[i] - num[i]));
            scale = std::max(scale, std::abs(num[i]));
        }
        const double rel = diff / std::max(scale, floor);
        if (rel > out.max_rel_error) {
            out.max_rel_error = rel;
            out.worst = name;
        }
    }
    return out;
}

} // namespace gmarl::testing
