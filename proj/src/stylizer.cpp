// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatstyle/stylizer.hpp"

#include "splatstyle/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace splatstyle {
namespace {

struct ConvLayer {
    std::string name;
    int in = 0;
    int out = 0;
    bool relu = true;
    bool resample_after = false; ///< pool (encoder) or upsample (decoder) after this layer
    int tap = -1;                ///< encoder tap index written after the activation
};

std::vector<ConvLayer> encoder_layers(const StylizerArch& a) {
    const auto [c1, c2, c3, c4] = a.widths;
    return {
        {"enc.conv1_1", 3, c1, true, false, 0},  {"enc.conv1_2", c1, c1, true, true, -1},
        {"enc.conv2_1", c1, c2, true, false, 1}, {"enc.conv2_2", c2, c2, true, true, -1},
        {"enc.conv3_1", c2, c3, true, false, 2}, {"enc.conv3_2", c3, c3, true, false, -1},
        {"enc.conv3_3", c3, c3, true, false, -1}, {"enc.conv3_4", c3, c3, true, true, -1},
        {"enc.conv4_1", c3, c4, true, false, 3},
    };
}

std::vector<ConvLayer> decoder_layers(const StylizerArch& a) {
    const auto [c1, c2, c3, c4] = a.widths;
    return {
        {"dec.conv4_1", c4, c3, true, true, -1},  {"dec.conv3_4", c3, c3, true, false, -1},
        {"dec.conv3_3", c3, c3, true, false, -1}, {"dec.conv3_2", c3, c3, true, false, -1},
        {"dec.conv3_1", c3, c2, true, true, -1},  {"dec.conv2_2", c2, c2, true, false, -1},
        {"dec.conv2_1", c2, c1, true, true, -1},  {"dec.conv1_2", c1, c1, true, false, -1},
        {"dec.conv1_1", c1, 3, false, false, -1},
    };
}

WeightSchema conv_schema(const std::vector<ConvLayer>& layers) {
    WeightSchema s;
    for (const auto& l : layers) {
        s.push_back({l.name + ".weight", {l.out, l.in, 3, 3}});
        s.push_back({l.name + ".bias", {l.out}});
    }
    return s;
}

int first_dim(const NetWeights& w, const std::string& name) {
    auto it = w.find(name);
    if (it == w.end() || it->second.shape.empty()) {
        throw ValidationError("weights: missing entry '" + name + "'");
    }
    return it->second.shape[0];
}

} // namespace

ScaleMode parse_scale_mode(const std::string& text) {
    if (text == "fullres") {
        return ScaleMode::Fullres;
    }
    if (text == "pooled") {
        return ScaleMode::Pooled;
    }
    throw ConfigError("mode must be 'fullres' or 'pooled', got '" + text + "'");
}

std::string to_string(ScaleMode mode) { return mode == ScaleMode::Fullres ? "fullres" : "pooled"; }

StylizerArch StylizerArch::tiny(int feature_dim) {
    StylizerArch a;
    a.widths = {16, 32, 64, 128};
    a.feature_dim = feature_dim;
    return a;
}

WeightSchema encoder_schema(const StylizerArch& arch) { return conv_schema(encoder_layers(arch)); }
WeightSchema decoder_schema(const StylizerArch& arch) { return conv_schema(decoder_layers(arch)); }
WeightSchema mlp_schema(const StylizerArch& arch) {
    return {{"mlp.weight", {arch.code_channels(), arch.feature_dim}}, {"mlp.bias", {arch.code_channels()}}};
}

NetWeights random_weights(const WeightSchema& schema, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    NetWeights out;
    for (const auto& spec : schema) {
        Tensor t{spec.shape, {}};
        t.data.assign(t.count(), 0.0f);
        if (spec.shape.size() >= 2) {
            std::size_t fan_in = 1;
            for (std::size_t i = 1; i < spec.shape.size(); ++i) {
                fan_in *= static_cast<std::size_t>(spec.shape[i]);
            }
            std::normal_distribution<double> n(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
            for (auto& v : t.data) {
                v = static_cast<float>(n(rng));
            }
        }
        out.emplace(spec.name, std::move(t));
    }
    return out;
}

NetWeights init_decoder_weights(const StylizerArch& arch, std::uint64_t seed) {
    NetWeights w = random_weights(decoder_schema(arch), seed);
    for (auto& v : w.at("dec.conv1_1.weight").data) {
        v *= 0.1f;
    }
    std::fill(w.at("dec.conv1_1.bias").data.begin(), w.at("dec.conv1_1.bias").data.end(), 0.5f);
    return w;
}

StylizerArch infer_arch(const NetWeights& encoder, const NetWeights* mlp) {
    StylizerArch a;
    a.widths = {first_dim(encoder, "enc.conv1_1.weight"), first_dim(encoder, "enc.conv2_1.weight"),
                first_dim(encoder, "enc.conv3_1.weight"), first_dim(encoder, "enc.conv4_1.weight")};
    if (mlp != nullptr) {
        auto it = mlp->find("mlp.weight");
        if (it == mlp->end() || it->second.shape.size() != 2) {
            throw ValidationError("weights: 'mlp.weight' must be a [C, D] matrix");
        }
        if (it->second.shape[0] != a.code_channels()) {
            throw ValidationError("weights: 'mlp.weight' has " + std::to_string(it->second.shape[0]) +
                                  " outputs but the encoder produces " + std::to_string(a.code_channels()));
        }
        a.feature_dim = it->second.shape[1];
    }
    validate_weights(encoder, encoder_schema(a));
    if (mlp != nullptr) {
        validate_weights(*mlp, mlp_schema(a));
    }
    return a;
}

ParamGrids to_grids(const NetWeights& weights, const WeightSchema& schema) {
    validate_weights(weights, schema);
    ParamGrids out;
    for (const auto& spec : schema) {
        const Tensor& t = weights.at(spec.name);
        Shape3 shape;
        switch (t.shape.size()) {
        case 1:
            shape = {t.shape[0], 1, 1};
            break;
        case 2:
            shape = {t.shape[0], t.shape[1], 1};
            break;
        case 4:
            shape = {t.shape[0], t.shape[1], t.shape[2] * t.shape[3]};
            break;
        default:
            throw ValidationError("weights: entry '" + spec.name + "' has unsupported rank " +
                                  std::to_string(t.shape.size()));
        }
        out.emplace(spec.name, Grid(shape, t.data));
    }
    return out;
}

NetWeights to_weights(const ParamGrids& grids, const WeightSchema& schema) {
    NetWeights out;
    for (const auto& spec : schema) {
        auto it = grids.find(spec.name);
        if (it == grids.end()) {
            throw ValidationError("parameters: missing entry '" + spec.name + "'");
        }
        Tensor t{spec.shape, {it->second.values().begin(), it->second.values().end()}};
        if (t.data.size() != t.count()) {
            throw ValidationError("parameters: entry '" + spec.name + "' holds " + std::to_string(t.data.size()) +
                                  " values for shape " + shape_string(spec.shape));
        }
        out.emplace(spec.name, std::move(t));
    }
    return out;
}

namespace ad {

Var BoundParams::at(const std::string& name) const {
    auto it = vars.find(name);
    if (it == vars.end()) {
        throw ValidationError("network parameter '" + name + "' is missing");
    }
    return it->second;
}

BoundParams bind(Tape& tape, const ParamGrids& grids, bool trainable) {
    BoundParams b;
    for (const auto& [name, g] : grids) {
        b.vars.emplace(name, tape.leaf(g, trainable));
    }
    return b;
}

namespace {

Var run_layers(Var x, const BoundParams& p, const std::vector<ConvLayer>& layers, ScaleMode mode, bool encoder,
               EncoderTaps* taps) {
    for (const auto& l : layers) {
        x = conv2d(x, p.at(l.name + ".weight"), p.at(l.name + ".bias"));
        if (l.relu) {
            x = relu(x);
        }
        if (taps != nullptr && l.tap >= 0) {
            (*taps)[static_cast<std::size_t>(l.tap)] = x;
        }
        if (l.resample_after && mode == ScaleMode::Pooled) {
            x = encoder ? max_pool2(x) : upsample2(x);
        }
    }
    return x;
}

} // namespace

Var encode(Var image, const BoundParams& encoder, ScaleMode mode, EncoderTaps* taps) {
    StylizerArch a;
    a.widths = {encoder.at("enc.conv1_1.weight").shape().channels, encoder.at("enc.conv2_1.weight").shape().channels,
                encoder.at("enc.conv3_1.weight").shape().channels, encoder.at("enc.conv4_1.weight").shape().channels};
    return run_layers(image, encoder, encoder_layers(a), mode, true, taps);
}

Var decode(Var feature, const BoundParams& decoder, ScaleMode mode) {
    // Decoder output widths run c3, c2, c1; the first layer's input width is c4.
    StylizerArch a;
    a.widths = {decoder.at("dec.conv1_2.weight").shape().channels, decoder.at("dec.conv2_2.weight").shape().channels,
                decoder.at("dec.conv3_4.weight").shape().channels, decoder.at("dec.conv4_1.weight").shape().height};
    return run_layers(feature, decoder, decoder_layers(a), mode, false, nullptr);
}

Var expand_feature(Var feature, const BoundParams& mlp) {
    return relu(dense(feature, mlp.at("mlp.weight"), mlp.at("mlp.bias")));
}

Var adain(Var normalized, const ChannelStats& code) {
    const auto c = static_cast<int>(code.channels());
    if (normalized.shape().channels != c) {
        throw ShapeError("adain: feature has " + std::to_string(normalized.shape().channels) +
                         " channels, style code has " + std::to_string(c));
    }
    Tape& tape = normalized.tape();
    return affine_channel(normalized, tape.constant(Grid::column(code.std)), tape.constant(Grid::column(code.mean)));
}

} // namespace ad

Grid encode(const Grid& image, const ParamGrids& encoder, ScaleMode mode) {
    ad::Tape tape;
    return ad::encode(tape.constant(image), ad::bind(tape, encoder, false), mode).value();
}

Grid decode(const Grid& feature, const ParamGrids& decoder, ScaleMode mode) {
    ad::Tape tape;
    return ad::decode(tape.constant(feature), ad::bind(tape, decoder, false), mode).value();
}

Grid expand_feature(const Grid& feature, const ParamGrids& mlp) {
    ad::Tape tape;
    return ad::expand_feature(tape.constant(feature), ad::bind(tape, mlp, false)).value();
}

StyleCode compute_style_code(const Grid& style, const ParamGrids& encoder, ScaleMode mode) {
    return channel_stats(encode(style, encoder, mode));
}

Grid adain(const Grid& normalized, const StyleCode& code) {
    ad::Tape tape;
    return ad::adain(tape.constant(normalized), code).value();
}

StylizedView stylize_view(const GaussianSet& gaussians, const Camera& cam, const StyleCode& code,
                          const StylizerModel& model, bool renormalize) {
    StylizedView v;
    v.render = rasterize(gaussians, cam);
    ad::Tape tape;
    ad::Var e = ad::expand_feature(tape.constant(v.render.feature), ad::bind(tape, model.mlp, false));
    v.expanded = e.value();
    if (renormalize) {
        e = ad::normalize(e);
    }
    ad::Var t = ad::adain(e, code);
    v.styled = t.value();
    v.image = ad::decode(t, ad::bind(tape, model.decoder, false), model.mode).value();
    return v;
}

} // namespace splatstyle
