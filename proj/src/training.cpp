// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatstyle/training.hpp"

#include "splatstyle/errors.hpp"
#include "splatstyle/image_io.hpp"
#include "splatstyle/ply.hpp"
#include "splatstyle/rasterizer.hpp"
#include "splatstyle/weights_io.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace fs = std::filesystem;
using nlohmann::json;

namespace splatstyle {
namespace {

std::string stage_dir_name(Stage s) { return "stage-" + std::to_string(static_cast<int>(s)); }

/// Appends one JSON object per iteration to `<out_dir>/train_log.jsonl`.
class LogWriter {
public:
    LogWriter(const TrainConfig& config, Stage stage) : stage_(stage), progress_(config.progress) {
        const fs::path& out_dir = config.out_dir;
        if (!out_dir.empty()) {
            fs::create_directories(out_dir);
            out_.open(out_dir / "train_log.jsonl", std::ios::app);
            if (!out_) {
                throw IoError("cannot open " + (out_dir / "train_log.jsonl").string());
            }
        }
    }

    void write(int iter, const std::map<std::string, double>& values, LossHistory& history) {
        for (const auto& [k, v] : values) {
            history[k].push_back(v);
        }
        if (progress_) {
            progress_(stage_, iter, values);
        }
        if (!out_.is_open()) {
            return;
        }
        json line{{"stage", to_string(stage_)}, {"iter", iter}};
        for (const auto& [k, v] : values) {
            line[k] = v;
        }
        out_ << line.dump() << '\n';
        out_.flush();
    }

private:
    Stage stage_;
    std::function<void(Stage, int, const std::map<std::string, double>&)> progress_;
    std::ofstream out_;
};

bool checkpoint_due(const TrainConfig& c, int iter) {
    return !c.out_dir.empty() && c.checkpoint_every > 0 && iter % c.checkpoint_every == 0;
}

fs::path checkpoint_dir(const TrainConfig& c, Stage s, int iter) {
    fs::path d = c.out_dir / stage_dir_name(s) / ("iter-" + std::to_string(iter));
    fs::create_directories(d);
    return d;
}

/// Architecture implied by decoder grids, for writing them back out.
StylizerArch decoder_arch(const ParamGrids& dec) {
    StylizerArch a;
    const Grid& top = dec.at("dec.conv4_1.weight");
    a.widths = {dec.at("dec.conv2_1.weight").channels(), dec.at("dec.conv3_1.weight").channels(), top.channels(),
                top.height()};
    return a;
}

StylizerArch mlp_arch(const ParamGrids& mlp) {
    StylizerArch a;
    const Grid& w = mlp.at("mlp.weight");
    a.widths[3] = w.channels();
    a.feature_dim = w.height();
    return a;
}

std::map<std::string, Grid> collect_grads(const ad::BoundParams& p) {
    std::map<std::string, Grid> out;
    for (const auto& [name, v] : p.vars) {
        out.emplace(name, v.grad());
    }
    return out;
}

double to_double(ad::Var v) { return static_cast<double>(v.value().item()); }

} // namespace

std::string to_string(Stage stage) {
    switch (stage) {
    case Stage::Decoder:
        return "decoder";
    case Stage::Geometry:
        return "geometry";
    case Stage::Style:
        return "style";
    }
    return "unknown";
}

void TrainConfig::validate() const {
    if (iterations <= 0) {
        throw ConfigError("iterations must be positive");
    }
    if (checkpoint_every < 0) {
        throw ConfigError("checkpoint interval must be non-negative");
    }
    if (lambda1 < 0 || lambda2 < 0 || lambda_style_2d < 0) {
        throw ConfigError("loss weights must be non-negative");
    }
    if (image_size < 8 || crop_size < 8) {
        throw ConfigError("image and crop sizes must be at least 8");
    }
    if (mode == ScaleMode::Pooled && image_size % 8 != 0) {
        throw ConfigError("pooled mode needs an image size divisible by 8");
    }
    if (ssim_weight < 0 || ssim_weight > 1) {
        throw ConfigError("ssim weight must lie in [0, 1]");
    }
    for (float lr : {decoder_lr, feature_lr, mlp_lr, geometry.position, geometry.rotation, geometry.scale,
                     geometry.opacity, geometry.sh}) {
        if (!(lr >= 0.0f) || !std::isfinite(lr)) {
            throw ConfigError("learning rates must be finite and non-negative");
        }
    }
    if (geometry.position_final < 0.0f || geometry.position_final > geometry.position) {
        throw ConfigError("final position rate must lie in [0, position rate]");
    }
}

double moving_average(const std::vector<double>& values, std::size_t end, std::size_t window) {
    end = std::min(end, values.size());
    const std::size_t begin = end > window ? end - window : 0;
    if (end == begin) {
        return 0.0;
    }
    return std::accumulate(values.begin() + static_cast<long>(begin), values.begin() + static_cast<long>(end), 0.0) /
           static_cast<double>(end - begin);
}

EpochSampler::EpochSampler(std::size_t n, std::uint64_t seed) : order_(n), pos_(n), rng_(seed) {
    if (n == 0) {
        throw ConfigError("cannot sample from an empty set");
    }
    std::iota(order_.begin(), order_.end(), std::size_t{0});
}

std::size_t EpochSampler::next() {
    if (pos_ == order_.size()) {
        std::shuffle(order_.begin(), order_.end(), rng_);
        pos_ = 0;
    }
    return order_[pos_++];
}

void GridAdam::step(ParamGrids& params, const std::map<std::string, Grid>& grads, float lr) {
    for (const auto& [name, g] : grads) {
        Grid& p = params.at(name);
        auto [it, inserted] = states_.try_emplace(name, p.size());
        adam_step(p.values(), g.values(), it->second, lr);
    }
}

std::vector<Grid> load_image_directory(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw ConfigError("image directory not found: " + dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::string ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (e.is_regular_file() && ext == ".png") {
            files.push_back(e.path());
        }
    }
    if (files.empty()) {
        throw ConfigError("no PNG images in " + dir.string());
    }
    std::sort(files.begin(), files.end());
    std::vector<Grid> out;
    out.reserve(files.size());
    for (const auto& f : files) {
        out.push_back(load_image(f));
    }
    return out;
}

Grid resize_bilinear(const Grid& image, int height, int width) {
    if (height <= 0 || width <= 0) {
        throw ShapeError("resize target must be positive");
    }
    Grid out(image.channels(), height, width);
    const double sy = static_cast<double>(image.height()) / height;
    const double sx = static_cast<double>(image.width()) / width;
    for (int y = 0; y < height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height() - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, image.height() - 1);
        const double ty = fy - y0;
        for (int x = 0; x < width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width() - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, image.width() - 1);
            const double tx = fx - x0;
            for (int c = 0; c < image.channels(); ++c) {
                const double top = (1 - tx) * image(c, y0, x0) + tx * image(c, y0, x1);
                const double bot = (1 - tx) * image(c, y1, x0) + tx * image(c, y1, x1);
                out(c, y, x) = static_cast<float>((1 - ty) * top + ty * bot);
            }
        }
    }
    return out;
}

Grid random_crop(const Grid& image, int size, std::mt19937_64& rng) {
    const Grid* src = &image;
    Grid scaled;
    const int shorter = std::min(image.height(), image.width());
    if (shorter < size) {
        const double f = static_cast<double>(size) / shorter;
        scaled = resize_bilinear(image, std::max(size, static_cast<int>(std::ceil(image.height() * f))),
                                 std::max(size, static_cast<int>(std::ceil(image.width() * f))));
        src = &scaled;
    }
    std::uniform_int_distribution<int> dy(0, src->height() - size);
    std::uniform_int_distribution<int> dx(0, src->width() - size);
    const int y0 = dy(rng);
    const int x0 = dx(rng);
    return src->crop(y0, x0, size, size);
}

double psnr(const Grid& render, const Grid& target) {
    require_same_shape(render, target, "psnr");
    double se = 0.0;
    for (std::size_t i = 0; i < render.size(); ++i) {
        const double d = std::clamp(static_cast<double>(render[i]), 0.0, 1.0) - target[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(render.size());
    return mse <= 0.0 ? 100.0 : -10.0 * std::log10(mse);
}

double mean_psnr(const GaussianSet& gaussians, const SceneDataset& scene) {
    if (scene.size() == 0) {
        throw ConfigError("scene has no views");
    }
    double sum = 0.0;
    for (std::size_t v = 0; v < scene.size(); ++v) {
        sum += psnr(rasterize(gaussians, scene.cameras[v]).color, scene.images[v]);
    }
    return sum / static_cast<double>(scene.size());
}

SceneBounds scene_bounds(const std::vector<Camera>& cameras) {
    if (cameras.empty()) {
        throw ConfigError("no cameras");
    }
    // Minimize sum_i |(I - d_i d_i^T)(p - o_i)|^2 over p.
    Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
    Eigen::Vector3d b = Eigen::Vector3d::Zero();
    for (const auto& cam : cameras) {
        const Eigen::Vector3d d = -cam.rotation().col(2).normalized();
        const Eigen::Matrix3d p = Eigen::Matrix3d::Identity() - d * d.transpose();
        a += p;
        b += p * cam.center();
    }
    SceneBounds out;
    Eigen::Vector3d mean_center = Eigen::Vector3d::Zero();
    for (const auto& cam : cameras) {
        mean_center += cam.center();
    }
    mean_center /= static_cast<double>(cameras.size());
    // Parallel axes make `a` singular; fall back to a point one unit ahead of the cameras.
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(a);
    if (eig.eigenvalues()(0) > 1e-6 * eig.eigenvalues()(2)) {
        out.center = a.ldlt().solve(b);
    } else {
        out.center = mean_center - cameras.front().rotation().col(2);
    }
    double dist = 0.0;
    for (const auto& cam : cameras) {
        dist += (cam.center() - out.center).norm();
    }
    out.radius = std::max(dist / static_cast<double>(cameras.size()), 1e-3);
    return out;
}

double camera_extent(const std::vector<Camera>& cameras) {
    if (cameras.empty()) {
        throw ConfigError("no cameras");
    }
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& cam : cameras) {
        mean += cam.center();
    }
    mean /= static_cast<double>(cameras.size());
    double r = 0.0;
    for (const auto& cam : cameras) {
        r = std::max(r, (cam.center() - mean).norm());
    }
    return std::max(r * 1.1, 1e-3);
}

GaussianSet random_init(const SceneBounds& bounds, std::size_t count, std::uint64_t seed, int sh_degree) {
    GaussianSet gs(sh_degree, kDefaultFeatureDim);
    gs.features_present = false;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double r = bounds.radius / 2.0;
    // Spacing of `count` points in the ball sets the initial scale.
    const double spacing = r * std::cbrt(4.0 / static_cast<double>(std::max<std::size_t>(count, 1)));
    for (std::size_t i = 0; i < count; ++i) {
        Eigen::Vector3d p;
        do {
            p = {u(rng), u(rng), u(rng)};
        } while (p.squaredNorm() > 1.0);
        FeatureGaussian g;
        g.position = bounds.center + r * p;
        g.log_scales = Eigen::Vector3d::Constant(std::log(spacing));
        g.opacity_logit = 0.0;
        g.sh.assign(static_cast<std::size_t>(sh_coeff_count(sh_degree)) * 3, 0.0f);
        g.feature.assign(kDefaultFeatureDim, 0.0f);
        gs.push_back(g);
    }
    return gs;
}

void init_features(GaussianSet& gaussians, int feature_dim, std::uint64_t seed) {
    if (feature_dim <= 0) {
        throw ConfigError("feature dimension must be positive");
    }
    gaussians.feature_dim = feature_dim;
    gaussians.features.assign(gaussians.size() * static_cast<std::size_t>(feature_dim), 0.0f);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 0.1);
    for (auto& f : gaussians.features) {
        f = static_cast<float>(n(rng));
    }
    gaussians.features_present = true;
}

DecoderResult pretrain_decoder(const TrainConfig& config, const std::vector<Grid>& contents,
                               const std::vector<Grid>& styles, const ParamGrids& encoder,
                               const ParamGrids& decoder_init) {
    config.validate();
    if (contents.empty()) {
        throw ConfigError("content corpus is empty");
    }
    if (styles.empty()) {
        throw ConfigError("style corpus is empty");
    }
    if (encoder.empty() || decoder_init.empty()) {
        throw ConfigError("encoder and decoder weights are required");
    }
    DecoderResult result{decoder_init, {}};
    const WeightSchema dec_schema = decoder_schema(decoder_arch(decoder_init));
    EpochSampler content_sampler(contents.size(), config.seed);
    EpochSampler style_sampler(styles.size(), config.seed + 1);
    std::mt19937_64 crop_rng(config.seed + 2);
    GridAdam adam;
    LogWriter log(config, Stage::Decoder);

    for (int iter = 1; iter <= config.iterations; ++iter) {
        const Grid c = random_crop(contents[content_sampler.next()], config.image_size, crop_rng);
        const Grid s = random_crop(styles[style_sampler.next()], config.image_size, crop_rng);

        const StyleCode code = compute_style_code(s, encoder, config.mode);
        const TapStats style_stats = style_tap_stats(s, encoder, config.mode);
        Grid t = adain(align_target(c, encoder, config.mode), code);

        ad::Tape tape;
        const ad::BoundParams enc = ad::bind(tape, encoder, false);
        const ad::BoundParams dec = ad::bind(tape, result.decoder, true);
        const ad::Var out = ad::decode(tape.constant(t), dec, config.mode);
        ad::EncoderTaps taps;
        const ad::Var feat = ad::encode(out, enc, config.mode, &taps);
        const ad::Var content = ad::mse_to(feat, t);
        const ad::Var style = ad::style_loss(taps, style_stats);
        const ad::Var total = ad::add(content, ad::scale(style, static_cast<float>(config.lambda_style_2d)));
        tape.backward(total);
        adam.step(result.decoder, collect_grads(dec), config.decoder_lr);

        log.write(iter, {{"total", to_double(total)}, {"content", to_double(content)}, {"style", to_double(style)}},
                  result.history);
        if (checkpoint_due(config, iter)) {
            save_weights(to_weights(result.decoder, dec_schema), checkpoint_dir(config, Stage::Decoder, iter) / "decoder");
        }
    }
    return result;
}

GeometryResult pretrain_geometry(const TrainConfig& config, const SceneDataset& scene, GaussianSet init) {
    config.validate();
    if (scene.size() == 0) {
        throw ConfigError("scene has no views");
    }
    scene.validate();
    init.check_consistent();
    GeometryResult result{std::move(init), {}, 0.0};
    GaussianSet& gs = result.gaussians;
    const std::size_t n = gs.size();
    const auto k = static_cast<std::size_t>(gs.sh_coeffs());

    AdamState s_pos(gs.positions.size());
    AdamState s_rot(gs.rotations.size());
    AdamState s_scale(gs.log_scales.size());
    AdamState s_opacity(gs.opacity_logits.size());
    AdamState s_dc(n * 3);
    AdamState s_rest(n * (k - 1) * 3);
    std::vector<float> dc(n * 3);
    std::vector<float> rest(n * (k - 1) * 3);
    std::vector<float> g_dc(n * 3);
    std::vector<float> g_rest(n * (k - 1) * 3);

    const double extent = camera_extent(scene.cameras);
    EpochSampler views(scene.size(), config.seed);
    LogWriter log(config, Stage::Geometry);

    for (int iter = 1; iter <= config.iterations; ++iter) {
        const std::size_t v = views.next();
        const Camera& cam = scene.cameras[v];
        const RenderOutput render = rasterize(gs, cam);

        ad::Tape tape;
        const ad::Var color = tape.leaf(render.color);
        const ad::Var loss = ad::photometric_loss(color, scene.images[v], config.ssim_weight);
        tape.backward(loss);
        const GaussianSet grads = rasterize_backward(gs, cam, color.grad(), Grid());

        const double t = config.iterations > 1 ? static_cast<double>(iter - 1) / (config.iterations - 1) : 0.0;
        const double pos_lr =
            config.geometry.position_final > 0.0f
                ? std::exp((1 - t) * std::log(config.geometry.position) + t * std::log(config.geometry.position_final))
                : config.geometry.position * (1 - t);
        if (n > 0) {
            adam_step(gs.positions, grads.positions, s_pos, static_cast<float>(pos_lr * extent));
            adam_step(gs.rotations, grads.rotations, s_rot, config.geometry.rotation);
            adam_step(gs.log_scales, grads.log_scales, s_scale, config.geometry.scale);
            adam_step(gs.opacity_logits, grads.opacity_logits, s_opacity, config.geometry.opacity);
            // SH bands split into DC and the rest, which trains 20x slower.
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < k * 3; ++j) {
                    const std::size_t src = i * k * 3 + j;
                    if (j < 3) {
                        dc[i * 3 + j] = gs.sh[src];
                        g_dc[i * 3 + j] = grads.sh[src];
                    } else {
                        rest[i * (k - 1) * 3 + j - 3] = gs.sh[src];
                        g_rest[i * (k - 1) * 3 + j - 3] = grads.sh[src];
                    }
                }
            }
            adam_step(dc, g_dc, s_dc, config.geometry.sh);
            adam_step(rest, g_rest, s_rest, config.geometry.sh / 20.0f);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < k * 3; ++j) {
                    gs.sh[i * k * 3 + j] = j < 3 ? dc[i * 3 + j] : rest[i * (k - 1) * 3 + j - 3];
                }
            }
        }

        std::map<std::string, double> values{{"total", to_double(loss)}};
        const bool ckpt = checkpoint_due(config, iter);
        if (ckpt || iter == config.iterations) {
            values["psnr"] = mean_psnr(gs, scene);
        }
        log.write(iter, values, result.history);
        if (ckpt) {
            save_gaussians(gs, checkpoint_dir(config, Stage::Geometry, iter) / "gaussians.ply");
        }
    }
    result.mean_psnr = mean_psnr(gs, scene);
    return result;
}

StyleResult train_style(const TrainConfig& config, const SceneDataset& scene, const GaussianSet& geometry,
                        const StylizerModel& model, const std::vector<Grid>& styles) {
    config.validate();
    if (scene.size() == 0) {
        throw ConfigError("scene has no views");
    }
    if (styles.empty()) {
        throw ConfigError("no style images");
    }
    if (model.encoder.empty() || model.decoder.empty() || model.mlp.empty()) {
        throw ConfigError("style training needs encoder, decoder and MLP weights");
    }
    if (geometry.empty()) {
        throw ConfigError("style training needs a non-empty Gaussian set");
    }
    scene.validate();
    geometry.check_consistent();

    StyleResult result{geometry, model.mlp, {}};
    GaussianSet& gs = result.gaussians;
    const int dim = model.mlp.at("mlp.weight").height();
    if (!gs.features_present || gs.feature_dim != dim) {
        init_features(gs, dim, config.seed + 7);
    }
    const WeightSchema schema = mlp_schema(mlp_arch(model.mlp));
    const ScaleMode mode = ScaleMode::Fullres; // the 3D pipeline always runs fullres

    std::vector<StyleCode> codes;
    std::vector<TapStats> tap_stats;
    for (const auto& s : styles) {
        codes.push_back(compute_style_code(s, model.encoder, mode));
        tap_stats.push_back(style_tap_stats(s, model.encoder, mode));
    }
    std::vector<Grid> targets(scene.size());
    if (!config.align_to_render) {
        for (std::size_t v = 0; v < scene.size(); ++v) {
            targets[v] = align_target(scene.images[v], model.encoder, mode);
        }
    }

    EpochSampler views(scene.size(), config.seed);
    EpochSampler style_sampler(styles.size(), config.seed + 1);
    std::mt19937_64 crop_rng(config.seed + 2);
    AdamState feature_state(gs.features.size());
    GridAdam mlp_adam;
    LogWriter log(config, Stage::Style);

    for (int iter = 1; iter <= config.iterations; ++iter) {
        const std::size_t v = views.next();
        const std::size_t si = style_sampler.next();
        const Camera& cam = scene.cameras[v];
        const RenderOutput render = rasterize(gs, cam);
        const Grid& target =
            config.align_to_render ? (targets[v] = align_target(render.color, model.encoder, mode)) : targets[v];

        const int size = std::min({config.crop_size, cam.height, cam.width});
        std::uniform_int_distribution<int> dy(0, cam.height - size);
        std::uniform_int_distribution<int> dx(0, cam.width - size);
        const int y0 = dy(crop_rng);
        const int x0 = dx(crop_rng);

        ad::Tape tape;
        const ad::Var feature = tape.leaf(render.feature);
        const ad::BoundParams mlp = ad::bind(tape, result.mlp, true);
        const ad::BoundParams enc = ad::bind(tape, model.encoder, false);
        const ad::BoundParams dec = ad::bind(tape, model.decoder, false);
        const ad::Var expanded = ad::expand_feature(feature, mlp);
        const ad::Var align = ad::mse_to(expanded, target);
        const ad::Var styled = ad::adain(ad::crop(expanded, y0, x0, size, size), codes[si]);
        const ad::Var out = ad::decode(styled, dec, mode);
        ad::EncoderTaps taps;
        const ad::Var feat = ad::encode(out, enc, mode, &taps);
        const ad::Var content = ad::mse_to(feat, styled.value());
        const ad::Var style = ad::style_loss(taps, tap_stats[si]);
        const ad::Var total =
            ad::add(align, ad::add(ad::scale(content, static_cast<float>(config.lambda1)),
                                   ad::scale(style, static_cast<float>(config.lambda2))));
        tape.backward(total);

        const GaussianSet grads = rasterize_backward(gs, cam, Grid(), feature.grad(), BackwardOptions{false});
        adam_step(gs.features, grads.features, feature_state, config.feature_lr);
        mlp_adam.step(result.mlp, collect_grads(mlp), config.mlp_lr);

        log.write(iter,
                  {{"total", to_double(total)},
                   {"align", to_double(align)},
                   {"content", to_double(content)},
                   {"style", to_double(style)}},
                  result.history);
        if (checkpoint_due(config, iter)) {
            const fs::path d = checkpoint_dir(config, Stage::Style, iter);
            save_gaussians(gs, d / "gaussians.ply");
            save_weights(to_weights(result.mlp, schema), d / "mlp");
        }
    }
    return result;
}

} // namespace splatstyle
