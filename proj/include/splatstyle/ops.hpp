// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatstyle/grid.hpp"
#include "splatstyle/tape.hpp"

#include <vector>

namespace splatstyle {

/// Lower bound applied to every standard deviation.
inline constexpr float kStdEpsilon = 1e-5f;

/// Per-channel population mean and clamped population standard deviation.
struct ChannelStats {
    std::vector<float> mean;
    std::vector<float> std;

    [[nodiscard]] std::size_t channels() const { return mean.size(); }
};

/// Two-pass statistics over the spatial positions of each channel, accumulated in double.
ChannelStats channel_stats(const Grid& input);

namespace ad {

/// 3x3 convolution, stride 1, one pixel of reflection padding so H x W is preserved.
/// kernel is laid out (out, in, 9) with the 3x3 taps row-major; bias is (out, 1, 1).
Var conv2d(Var input, Var kernel, Var bias);

Var relu(Var input);

struct StatsVars {
    Var mean; ///< (C, 1, 1)
    Var std;  ///< (C, 1, 1), clamped below at kStdEpsilon
};
StatsVars channel_stats(Var input);

/// (x - mean) / std per channel, differentiable through both statistics.
Var normalize(Var input);

/// out[c] = scale[c] * in[c] + shift[c]; scale and shift are (C, 1, 1).
Var affine_channel(Var input, Var scale, Var shift);

/// Applies the same affine map to the channel vector of every pixel.
/// weights is (out, in, 1); bias is (out, 1, 1).
Var dense(Var input, Var weights, Var bias);

/// Mean of squared differences; gradient 2(a - b)/N.
Var mse(Var a, Var b);
/// Sum of squared differences.
Var sse(Var a, Var b);
/// Mean absolute difference.
Var l1(Var a, Var b);

Var add(Var a, Var b);
Var scale(Var a, float s);

/// 2x2 max reduction (floor for odd sizes).
Var max_pool2(Var input);
/// Nearest-neighbour doubling.
Var upsample2(Var input);
Var crop(Var input, int y0, int x0, int height, int width);

} // namespace ad
} // namespace splatstyle
