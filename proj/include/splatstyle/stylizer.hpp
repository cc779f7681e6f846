// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatstyle/camera.hpp"
#include "splatstyle/gaussian.hpp"
#include "splatstyle/grid.hpp"
#include "splatstyle/ops.hpp"
#include "splatstyle/rasterizer.hpp"
#include "splatstyle/tape.hpp"
#include "splatstyle/weights_io.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>

namespace splatstyle {

/// `Pooled` halves resolution at each of the three encoder pooling stages and doubles it at
/// the matching decoder stages. `Fullres` replaces both with identity layers.
enum class ScaleMode { Fullres, Pooled };

ScaleMode parse_scale_mode(const std::string& text); ///< "fullres" | "pooled", else ConfigError
std::string to_string(ScaleMode mode);

/// Channel widths of the VGG-19 slice up to relu4_1 and the latent feature size.
struct StylizerArch {
    std::array<int, 4> widths{64, 128, 256, 512};
    int feature_dim = kDefaultFeatureDim;

    /// 16 -> 32 -> 64 -> 128 stand-in used for desk-scale runs.
    static StylizerArch tiny(int feature_dim = kDefaultFeatureDim);
    [[nodiscard]] int code_channels() const { return widths[3]; }
};

/// Layer tables. Conv weights are [out, in, 3, 3], conv biases [out]; the expansion MLP is
/// "mlp.weight" [C, D] and "mlp.bias" [C] with C = widths[3].
WeightSchema encoder_schema(const StylizerArch& arch);
WeightSchema decoder_schema(const StylizerArch& arch);
WeightSchema mlp_schema(const StylizerArch& arch);

/// He-normal weights with zero biases from a fixed seed.
NetWeights random_weights(const WeightSchema& schema, std::uint64_t seed);

/// Decoder starting point: He-normal hidden layers; the output layer has weights scaled by 0.1
/// and a 0.5 bias so the first decoded images sit near mid-gray instead of far outside [0, 1].
NetWeights init_decoder_weights(const StylizerArch& arch, std::uint64_t seed);

/// Recovers the architecture from encoder weights (widths) and, when given, MLP weights
/// (feature_dim). Throws ValidationError if the entries are inconsistent.
StylizerArch infer_arch(const NetWeights& encoder, const NetWeights* mlp = nullptr);

/// Network parameters as grids: conv kernels (out, in, 9), dense weights (out, in, 1),
/// biases (out, 1, 1).
using ParamGrids = std::map<std::string, Grid>;
ParamGrids to_grids(const NetWeights& weights, const WeightSchema& schema);
NetWeights to_weights(const ParamGrids& grids, const WeightSchema& schema);

namespace ad {

/// Parameters placed on a tape, either as trainable leaves or as constants.
struct BoundParams {
    std::map<std::string, Var> vars;
    [[nodiscard]] Var at(const std::string& name) const;
};
BoundParams bind(Tape& tape, const ParamGrids& grids, bool trainable);

/// Activations at relu1_1, relu2_1, relu3_1 and relu4_1.
using EncoderTaps = std::array<Var, 4>;

Var encode(Var image, const BoundParams& encoder, ScaleMode mode, EncoderTaps* taps = nullptr);
Var decode(Var feature, const BoundParams& decoder, ScaleMode mode);
/// Per-pixel relu(W f + b).
Var expand_feature(Var feature, const BoundParams& mlp);
/// sigma_s * x + mu_s per channel, with the code entered as constants.
Var adain(Var normalized, const ChannelStats& code);

} // namespace ad

using StyleCode = ChannelStats;

Grid encode(const Grid& image, const ParamGrids& encoder, ScaleMode mode);
Grid decode(const Grid& feature, const ParamGrids& decoder, ScaleMode mode);
Grid expand_feature(const Grid& feature, const ParamGrids& mlp);
/// channel_stats of the encoded style image.
StyleCode compute_style_code(const Grid& style, const ParamGrids& encoder, ScaleMode mode);
/// Per-channel code.std * x + code.mean. A (0, 1) code is an exact identity.
Grid adain(const Grid& normalized, const StyleCode& code);

/// Everything the stylizer needs at inference.
struct StylizerModel {
    ParamGrids encoder;
    ParamGrids decoder;
    ParamGrids mlp;
    ScaleMode mode = ScaleMode::Fullres;
};

/// Intermediate maps of one stylized view.
struct StylizedView {
    RenderOutput render;
    Grid expanded; ///< expand_feature(render.feature)
    Grid styled;   ///< adain input after the optional per-view renormalization, mapped by the code
    Grid image;    ///< decoded RGB, unclamped
};

/// decode(adain(expand_feature(rasterize(gaussians, cam).feature), code)). With `renormalize`
/// the expanded map is re-normalized per view before the affine map (the view-specific
/// variant used for ablations).
StylizedView stylize_view(const GaussianSet& gaussians, const Camera& cam, const StyleCode& code,
                          const StylizerModel& model, bool renormalize = false);

} // namespace splatstyle
