// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatstyle/camera.hpp"
#include "splatstyle/gaussian.hpp"
#include "splatstyle/grid.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <vector>

namespace splatstyle {

namespace raster {
inline constexpr double kNearPlane = 0.01;
inline constexpr double kDilation = 0.3;      ///< added to the 2D covariance diagonal (pixels^2)
inline constexpr double kMaxAlpha = 0.99;     ///< per-splat opacity clamp
inline constexpr double kMinExponent = -4.5;  ///< 3-sigma evaluation cutoff
inline constexpr double kMinTransmittance = 1e-4;
inline constexpr int kTileSize = 8;
} // namespace raster

/// A Gaussian projected to the image plane.
struct Splat2D {
    Eigen::Vector2d mean2d = Eigen::Vector2d::Zero(); ///< pixels
    Eigen::Matrix2d cov2d = Eigen::Matrix2d::Identity();
    Eigen::Vector3d conic = Eigen::Vector3d(1, 0, 1); ///< inverse 2D covariance (a, b, c) = [[a, b], [b, c]]
    double depth = 1.0;
    double alpha = 0.0; ///< sigmoid(opacity), before the per-pixel falloff
    Eigen::Vector3d color = Eigen::Vector3d::Zero();
    std::vector<float> feature;
    int source = 0;
    /// Inclusive pixel bounds of the 3-sigma footprint, clipped to the image.
    int x_min = 0;
    int y_min = 0;
    int x_max = -1;
    int y_max = -1;
};

/// Per-pixel compositing result. All grids share the camera's H x W.
struct RenderOutput {
    Grid color;   ///< 3 x H x W, background 0
    Grid feature; ///< D x H x W
    Grid alpha;   ///< 1 x H x W, accumulated opacity 1 - T
    Grid depth;   ///< 1 x H x W, alpha-weighted expected depth (0 where alpha == 0)
};

/// Pinhole projection with the first-order perspective Jacobian and low-pass dilation.
/// Returns nullopt when the center is nearer than the near plane or the footprint misses the
/// image. Color and feature are left empty.
std::optional<Splat2D> project(const ActivatedGaussian& g, const Camera& cam);

/// Front-to-back compositing of depth-sorted splats (ascending depth, ties by source index).
/// Throws Error when the order is violated.
RenderOutput composite(std::span<const Splat2D> splats, int feature_dim, int height, int width);

/// Color of Gaussian `i` seen from `cam`: SH evaluated along the camera-to-Gaussian direction,
/// rounded through float. This is exactly the color the rasterizer composites.
Eigen::Vector3d view_color(const GaussianSet& gaussians, std::size_t i, const Camera& cam);

/// activate -> project -> global depth sort -> composite. Color comes from the SH coefficients
/// evaluated along the camera-to-Gaussian direction.
RenderOutput rasterize(const GaussianSet& gaussians, const Camera& cam);

struct BackwardOptions {
    /// When false only feature and color gradients are produced (geometry gradients stay zero).
    bool geometry = true;
};

/// Gradients of <d_color, color> + <d_feature, feature> w.r.t. every Gaussian parameter, laid
/// out like the input set. Clamped opacities, cut-off tails and clamped colors contribute no
/// gradient. Throws ShapeError when the upstream gradients do not match the render size.
GaussianSet rasterize_backward(const GaussianSet& gaussians, const Camera& cam, const Grid& d_color,
                               const Grid& d_feature, const BackwardOptions& options = {});

} // namespace splatstyle
