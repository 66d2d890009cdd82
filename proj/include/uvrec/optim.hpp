#pragma once
#include "uvrec/tensor.hpp"

namespace uvrec {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// First/second-moment state for one flat parameter list.  Lazily sized on
// the first step so construction needs no shapes.
struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::uint64_t t = 0;
};

// One Adam update with bias correction over every tensor in `params`,
// consuming the gradients currently held on each tensor.
inline void adam_step(std::vector<Tensor>& params, AdamState& state, const AdamConfig& cfg = {}) {
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(params[i].size(), 0.0);
            state.v[i].assign(params[i].size(), 0.0);
        }
    }
    if (state.m.size() != params.size()) throw UsageError("adam_step: state tracks a different parameter list");
    ++state.t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        if (p.size() != state.m[i].size()) throw UsageError("adam_step: parameter " + std::to_string(i) + " changed size");
        const auto& g = p.grad();
        auto& m = state.m[i];
        auto& v = state.v[i];
        auto& val = p.data();
        for (std::size_t j = 0; j < val.size(); ++j) {
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            val[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

}  // namespace uvrec
