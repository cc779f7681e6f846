// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace splatstyle {

struct AdamConfig {
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

/// First/second moment buffers and step count for one parameter array.
struct AdamState {
    std::vector<float> m;
    std::vector<float> v;
    std::int64_t step = 0;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0f), v(n, 0.0f) {}
};

/// One bias-corrected adaptive-moment update in place. Throws ShapeError when params, grads and
/// state disagree in length.
void adam_step(std::span<float> params, std::span<const float> grads, AdamState& state, float lr,
               const AdamConfig& config = {});

} // namespace splatstyle
