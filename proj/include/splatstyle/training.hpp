// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatstyle/adam.hpp"
#include "splatstyle/gaussian.hpp"
#include "splatstyle/grid.hpp"
#include "splatstyle/losses.hpp"
#include "splatstyle/scene_io.hpp"
#include "splatstyle/stylizer.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace splatstyle {

enum class Stage { Decoder = 1, Geometry = 2, Style = 3 };
std::string to_string(Stage stage);

/// Per-group Adam rates of the geometry stage. The position rate is multiplied by the scene
/// extent and decays exponentially from `position` to `position_final`.
struct GeometryRates {
    float position = 1.6e-4f;
    float position_final = 1.6e-6f;
    float rotation = 1e-3f;
    float scale = 5e-3f;
    float opacity = 5e-2f;
    float sh = 2.5e-3f; ///< DC band; higher bands use sh / 20
};

struct TrainConfig {
    int iterations = 2000;
    std::uint64_t seed = 0;
    /// Write a checkpoint every k iterations (0: never). Checkpoints and train_log.jsonl go to
    /// `out_dir` when it is set.
    int checkpoint_every = 0;
    std::filesystem::path out_dir;

    // decoder pre-training
    float decoder_lr = 1e-4f;
    double lambda_style_2d = 1.0;
    int image_size = 64;
    ScaleMode mode = ScaleMode::Fullres;

    // geometry pre-training
    GeometryRates geometry;
    double ssim_weight = kDefaultSsimWeight;

    // style training
    float feature_lr = 2.5e-3f;
    float mlp_lr = 2.5e-3f;
    double lambda1 = 1.0; ///< content loss weight
    double lambda2 = 1.0; ///< style loss weight
    int crop_size = 32;   ///< side of the random crop fed through decoder and encoder
    /// Align against the current color render instead of the ground-truth photograph.
    bool align_to_render = false;

    /// Called after every iteration with the logged scalars; may be empty.
    std::function<void(Stage, int iter, const std::map<std::string, double>&)> progress;

    /// Throws ConfigError on out-of-range values.
    void validate() const;
};

/// Loss scalars per iteration, keyed by name ("total", "content", ...).
using LossHistory = std::map<std::string, std::vector<double>>;

/// Mean of the `window` values ending at index `end` (exclusive), clipped at the front.
double moving_average(const std::vector<double>& values, std::size_t end, std::size_t window);

/// Visits indices 0..n-1 in a freshly shuffled order each epoch.
class EpochSampler {
public:
    EpochSampler(std::size_t n, std::uint64_t seed);
    std::size_t next();

private:
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0;
    std::mt19937_64 rng_;
};

/// Adam over a named set of grids, one moment buffer per entry.
class GridAdam {
public:
    void step(ParamGrids& params, const std::map<std::string, Grid>& grads, float lr);

private:
    std::map<std::string, AdamState> states_;
};

/// Sorted PNG files of a directory, loaded as RGB grids. Throws ConfigError when the directory
/// is missing or holds no PNGs.
std::vector<Grid> load_image_directory(const std::filesystem::path& dir);

/// Bilinear resize (pixel centers aligned).
Grid resize_bilinear(const Grid& image, int height, int width);

/// Random size x size crop; images smaller than `size` are first upscaled so the shorter side
/// fits.
Grid random_crop(const Grid& image, int size, std::mt19937_64& rng);

double psnr(const Grid& render, const Grid& target);
/// Mean PSNR of clamped renders over all views.
double mean_psnr(const GaussianSet& gaussians, const SceneDataset& scene);

/// Point where the optical axes of the cameras pass closest (least squares), and the mean
/// camera distance to it.
struct SceneBounds {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    double radius = 1.0;
};
SceneBounds scene_bounds(const std::vector<Camera>& cameras);
/// Max camera distance from the camera centroid, times 1.1. Scales the position rate.
double camera_extent(const std::vector<Camera>& cameras);

/// `count` gray, half-transparent Gaussians uniform in a ball of radius bounds.radius / 2
/// around bounds.center, with features zero and `features_present` false.
GaussianSet random_init(const SceneBounds& bounds, std::size_t count, std::uint64_t seed,
                        int sh_degree = kMaxShDegree);

struct DecoderResult {
    ParamGrids decoder;
    LossHistory history;
};
/// Trains only the decoder: t = adain(normalize(encode(c)), code(s)), out = decode(t),
/// loss = content(encode(out), t) + lambda_style_2d * style(out, s). Contents and styles are
/// random crops of config.image_size. Throws ConfigError on an empty corpus.
DecoderResult pretrain_decoder(const TrainConfig& config, const std::vector<Grid>& contents,
                               const std::vector<Grid>& styles, const ParamGrids& encoder,
                               const ParamGrids& decoder_init);

struct GeometryResult {
    GaussianSet gaussians;
    LossHistory history;
    double mean_psnr = 0.0;
};
/// Photometric fitting of position, rotation, scale, opacity and SH over the training views.
/// Features are copied through unchanged. Throws ConfigError when the scene has no views.
GeometryResult pretrain_geometry(const TrainConfig& config, const SceneDataset& scene, GaussianSet init);

struct StyleResult {
    GaussianSet gaussians;
    ParamGrids mlp;
    LossHistory history; ///< "align", "content", "style", "total"
};
/// Trains per-Gaussian features and the expansion MLP with
/// align + lambda1 * content + lambda2 * style; geometry, encoder and decoder stay fixed.
/// When the input set carries no features they are initialized to small random values.
/// Throws ConfigError on missing inputs (no views, no styles, empty networks, empty cloud).
StyleResult train_style(const TrainConfig& config, const SceneDataset& scene, const GaussianSet& geometry,
                        const StylizerModel& model, const std::vector<Grid>& styles);

/// Features drawn from N(0, 0.1^2), seeded.
void init_features(GaussianSet& gaussians, int feature_dim, std::uint64_t seed);

} // namespace splatstyle
