#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "fginpaint/net.hpp"

namespace fginpaint {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// One Adam update over every entry of the set, in declaration order.
/// A zero learning rate still advances the moments but leaves the parameter
/// values bit-identical (x - 0.0 is exact for finite x).
inline void adam_step(ParamSet& ps, const GradSet& grads, const AdamConfig& cfg) {
    const std::int64_t t = ++ps.adam_t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (const auto& name : ps.order) {
        ParamEntry& e = ps.entry(name);
        const Tensor& g = grads.at(name);
        if (!g.same_shape(e.value)) throw DimensionError("adam: grad shape mismatch " + name);
        for (std::int64_t i = 0; i < e.value.numel(); ++i) {
            e.m[i] = cfg.beta1 * e.m[i] + (1.0 - cfg.beta1) * g[i];
            e.v[i] = cfg.beta2 * e.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = e.m[i] / bc1;
            const double vhat = e.v[i] / bc2;
            e.value[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

inline void clip_params(ParamSet& ps, double bound) {
    for (const auto& name : ps.order) {
        Tensor& t = ps.entry(name).value;
        for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = std::clamp(t[i], -bound, bound);
    }
}

} // namespace fginpaint
