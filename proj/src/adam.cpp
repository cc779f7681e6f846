// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatstyle/adam.hpp"

#include "splatstyle/errors.hpp"

#include <cmath>
#include <string>

namespace splatstyle {

void adam_step(std::span<float> params, std::span<const float> grads, AdamState& state, float lr,
               const AdamConfig& config) {
    if (params.size() != grads.size() || params.size() != state.m.size() || params.size() != state.v.size()) {
        throw ShapeError("adam_step: params " + std::to_string(params.size()) + ", grads " +
                         std::to_string(grads.size()) + ", state " + std::to_string(state.m.size()));
    }
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(static_cast<double>(config.beta1), t);
    const double c2 = 1.0 - std::pow(static_cast<double>(config.beta2), t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const float g = grads[i];
        state.m[i] = config.beta1 * state.m[i] + (1.0f - config.beta1) * g;
        state.v[i] = config.beta2 * state.v[i] + (1.0f - config.beta2) * g * g;
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        params[i] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + config.eps));
    }
}

} // namespace splatstyle
