// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace splatstyle {

inline constexpr int kDefaultFeatureDim = 32;
inline constexpr int kMaxShDegree = 3;

inline constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

/// One anisotropic 3D Gaussian carrying a latent feature vector.
/// Rotation is a (w, x, y, z) quaternion normalized on read; scales live in log domain and
/// opacity in logit domain so every parameter is unconstrained.
struct FeatureGaussian {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector4d rotation{1.0, 0.0, 0.0, 0.0};
    Eigen::Vector3d log_scales = Eigen::Vector3d::Zero();
    double opacity_logit = 0.0;
    std::vector<float> sh;      ///< coefficient-major: sh[k * 3 + channel]
    std::vector<float> feature; ///< D values
};

/// Structure-of-arrays storage for a Gaussian cloud. Also used, zero-initialized, as the
/// gradient buffer of the same cloud.
struct GaussianSet {
    int sh_degree = kMaxShDegree;
    int feature_dim = kDefaultFeatureDim;
    bool features_present = true;

    std::vector<float> positions;      ///< N x 3
    std::vector<float> rotations;      ///< N x 4, (w, x, y, z)
    std::vector<float> log_scales;     ///< N x 3
    std::vector<float> opacity_logits; ///< N
    std::vector<float> sh;             ///< N x K x 3, K = (degree + 1)^2
    std::vector<float> features;       ///< N x D

    GaussianSet() = default;
    GaussianSet(int sh_degree, int feature_dim) : sh_degree(sh_degree), feature_dim(feature_dim) {}

    [[nodiscard]] std::size_t size() const { return opacity_logits.size(); }
    [[nodiscard]] bool empty() const { return opacity_logits.empty(); }
    [[nodiscard]] int sh_coeffs() const { return sh_coeff_count(sh_degree); }

    void resize(std::size_t n);
    void push_back(const FeatureGaussian& g);
    [[nodiscard]] FeatureGaussian at(std::size_t i) const;

    [[nodiscard]] Eigen::Vector3d position(std::size_t i) const;
    [[nodiscard]] std::span<const float> sh_of(std::size_t i) const;
    [[nodiscard]] std::span<const float> feature_of(std::size_t i) const;
    [[nodiscard]] std::span<float> feature_of(std::size_t i);

    /// Same sizes and settings, all values zero.
    [[nodiscard]] GaussianSet zeros_like() const;
    /// Throws FormatError when array lengths disagree with size(), degree and feature_dim.
    void check_consistent() const;

    friend bool operator==(const GaussianSet&, const GaussianSet&) = default;
};

/// Rotation matrix of the normalized quaternion (w, x, y, z). Throws Error for a zero quaternion.
Eigen::Matrix3d quaternion_to_rotation(const Eigen::Vector4d& q);

/// Sigma = R S S^T R^T with S = diag(exp(log_scales)).
Eigen::Matrix3d build_covariance(const Eigen::Vector4d& q, const Eigen::Vector3d& log_scales);

/// Gradients of a scalar loss w.r.t. the raw quaternion and the log-scales, given dL/dSigma
/// (treated as a full, not necessarily symmetric, 3x3 matrix).
struct CovarianceGrad {
    Eigen::Vector4d d_rotation = Eigen::Vector4d::Zero();
    Eigen::Vector3d d_log_scales = Eigen::Vector3d::Zero();
};
CovarianceGrad build_covariance_backward(const Eigen::Vector4d& q, const Eigen::Vector3d& log_scales,
                                         const Eigen::Matrix3d& d_cov);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Real spherical-harmonic basis up to degree 3 evaluated at a unit direction.
/// Writes sh_coeff_count(degree) values.
void sh_basis(int degree, const Eigen::Vector3d& dir, std::span<double> out);

/// RGB = max(0, 0.5 + sum_k sh[k] Y_k(dir)). No upper clamp. Throws Error for degree > 3.
Eigen::Vector3d sh_to_color(std::span<const float> sh, const Eigen::Vector3d& dir, int degree);

struct ShColorGrad {
    std::vector<double> d_sh;              ///< same layout as sh
    Eigen::Vector3d d_dir = Eigen::Vector3d::Zero();
};
/// Backward of sh_to_color given dL/dRGB. Channels clamped at zero pass no gradient.
ShColorGrad sh_to_color_backward(std::span<const float> sh, const Eigen::Vector3d& dir, int degree,
                                 const Eigen::Vector3d& d_color);

struct ActivatedGaussian {
    Eigen::Vector3d mean;
    Eigen::Matrix3d covariance;
    double alpha = 0.0; ///< sigmoid(opacity_logit)
    std::vector<float> feature;
};
ActivatedGaussian activate(const FeatureGaussian& g);

} // namespace splatstyle
