// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatstyle/grid.hpp"
#include "splatstyle/ops.hpp"
#include "splatstyle/stylizer.hpp"
#include "splatstyle/tape.hpp"

#include <array>

namespace splatstyle {

inline constexpr double kDefaultSsimWeight = 0.2;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

/// Channel stats of a style image at the four encoder taps.
using TapStats = std::array<ChannelStats, 4>;

/// Mean SSIM over channels and pixels with an 11x11 Gaussian window (sigma 1.5, zero padding).
double ssim(const Grid& a, const Grid& b);

/// (1 - w) * L1 + w * (1 - SSIM).
double loss_photometric(const Grid& render, const Grid& target, double ssim_weight = kDefaultSsimWeight);

/// normalize(encode(content)): per-channel zero mean and unit std.
Grid align_target(const Grid& content, const ParamGrids& encoder, ScaleMode mode);
double loss_align(const Grid& expanded, const Grid& target);
double loss_content(const Grid& output_feature, const Grid& adain_target);
TapStats style_tap_stats(const Grid& style, const ParamGrids& encoder, ScaleMode mode);
/// Sum over taps of ||mu_d - mu_s||^2 + ||sigma_d - sigma_s||^2.
double loss_style(const Grid& decoded, const Grid& style, const ParamGrids& encoder, ScaleMode mode);

namespace ad {

/// Mean SSIM against a constant target; differentiable in `x`.
Var ssim(Var x, const Grid& target);
Var photometric_loss(Var render, const Grid& target, double ssim_weight = kDefaultSsimWeight);
/// mse against a constant (detached) target.
Var mse_to(Var a, const Grid& target);
/// Style loss from the taps of an encoded image.
Var style_loss(const EncoderTaps& taps, const TapStats& style);

} // namespace ad
} // namespace splatstyle
