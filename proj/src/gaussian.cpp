// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatstyle/gaussian.hpp"

#include "splatstyle/errors.hpp"

#include <algorithm>
#include <string>

namespace splatstyle {
namespace {

constexpr double kShC0 = 0.28209479177387814;
constexpr double kShC1 = 0.4886025119029199;
constexpr std::array<double, 5> kShC2 = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                                         -1.0925484305920792, 0.5462742152960396};
constexpr std::array<double, 7> kShC3 = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                                         0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                                         -0.5900435899266435};

/// Value plus gradient w.r.t. the three direction components.
struct Dual3 {
    double v = 0.0;
    std::array<double, 3> d{};

    Dual3() = default;
    Dual3(double value) : v(value) {} // NOLINT(google-explicit-constructor)
    static Dual3 var(double value, int axis) {
        Dual3 r(value);
        r.d[static_cast<std::size_t>(axis)] = 1.0;
        return r;
    }
    friend Dual3 operator+(const Dual3& a, const Dual3& b) {
        Dual3 r(a.v + b.v);
        for (std::size_t i = 0; i < 3; ++i) {
            r.d[i] = a.d[i] + b.d[i];
        }
        return r;
    }
    friend Dual3 operator-(const Dual3& a, const Dual3& b) {
        Dual3 r(a.v - b.v);
        for (std::size_t i = 0; i < 3; ++i) {
            r.d[i] = a.d[i] - b.d[i];
        }
        return r;
    }
    friend Dual3 operator*(const Dual3& a, const Dual3& b) {
        Dual3 r(a.v * b.v);
        for (std::size_t i = 0; i < 3; ++i) {
            r.d[i] = a.d[i] * b.v + a.v * b.d[i];
        }
        return r;
    }
};

template <class T>
void basis(int degree, const T& x, const T& y, const T& z, T* out) {
    out[0] = T(kShC0);
    if (degree < 1) {
        return;
    }
    out[1] = T(-kShC1) * y;
    out[2] = T(kShC1) * z;
    out[3] = T(-kShC1) * x;
    if (degree < 2) {
        return;
    }
    const T xx = x * x;
    const T yy = y * y;
    const T zz = z * z;
    const T xy = x * y;
    const T yz = y * z;
    const T xz = x * z;
    out[4] = T(kShC2[0]) * xy;
    out[5] = T(kShC2[1]) * yz;
    out[6] = T(kShC2[2]) * (T(2.0) * zz - xx - yy);
    out[7] = T(kShC2[3]) * xz;
    out[8] = T(kShC2[4]) * (xx - yy);
    if (degree < 3) {
        return;
    }
    out[9] = T(kShC3[0]) * y * (T(3.0) * xx - yy);
    out[10] = T(kShC3[1]) * xy * z;
    out[11] = T(kShC3[2]) * y * (T(4.0) * zz - xx - yy);
    out[12] = T(kShC3[3]) * z * (T(2.0) * zz - T(3.0) * xx - T(3.0) * yy);
    out[13] = T(kShC3[4]) * x * (T(4.0) * zz - xx - yy);
    out[14] = T(kShC3[5]) * z * (xx - yy);
    out[15] = T(kShC3[6]) * x * (xx - T(3.0) * yy);
}

void check_degree(int degree) {
    if (degree < 0 || degree > kMaxShDegree) {
        throw Error("unsupported spherical-harmonic degree " + std::to_string(degree));
    }
}

} // namespace

void GaussianSet::resize(std::size_t n) {
    positions.resize(n * 3, 0.0f);
    rotations.resize(n * 4, 0.0f);
    log_scales.resize(n * 3, 0.0f);
    opacity_logits.resize(n, 0.0f);
    sh.resize(n * static_cast<std::size_t>(sh_coeffs()) * 3, 0.0f);
    features.resize(n * static_cast<std::size_t>(feature_dim), 0.0f);
}

void GaussianSet::push_back(const FeatureGaussian& g) {
    const auto k = static_cast<std::size_t>(sh_coeffs()) * 3;
    if (g.sh.size() != k) {
        throw ShapeError("Gaussian has " + std::to_string(g.sh.size()) + " SH values, set expects " +
                         std::to_string(k));
    }
    if (g.feature.size() != static_cast<std::size_t>(feature_dim)) {
        throw ShapeError("Gaussian feature has " + std::to_string(g.feature.size()) + " values, set expects " +
                         std::to_string(feature_dim));
    }
    for (int i = 0; i < 3; ++i) {
        positions.push_back(static_cast<float>(g.position[i]));
        log_scales.push_back(static_cast<float>(g.log_scales[i]));
    }
    for (int i = 0; i < 4; ++i) {
        rotations.push_back(static_cast<float>(g.rotation[i]));
    }
    opacity_logits.push_back(static_cast<float>(g.opacity_logit));
    sh.insert(sh.end(), g.sh.begin(), g.sh.end());
    features.insert(features.end(), g.feature.begin(), g.feature.end());
}

FeatureGaussian GaussianSet::at(std::size_t i) const {
    FeatureGaussian g;
    for (int k = 0; k < 3; ++k) {
        g.position[k] = positions[i * 3 + static_cast<std::size_t>(k)];
        g.log_scales[k] = log_scales[i * 3 + static_cast<std::size_t>(k)];
    }
    for (int k = 0; k < 4; ++k) {
        g.rotation[k] = rotations[i * 4 + static_cast<std::size_t>(k)];
    }
    g.opacity_logit = opacity_logits[i];
    auto s = sh_of(i);
    g.sh.assign(s.begin(), s.end());
    auto f = feature_of(i);
    g.feature.assign(f.begin(), f.end());
    return g;
}

Eigen::Vector3d GaussianSet::position(std::size_t i) const {
    return {positions[i * 3], positions[i * 3 + 1], positions[i * 3 + 2]};
}

std::span<const float> GaussianSet::sh_of(std::size_t i) const {
    const auto k = static_cast<std::size_t>(sh_coeffs()) * 3;
    return std::span<const float>(sh).subspan(i * k, k);
}

std::span<const float> GaussianSet::feature_of(std::size_t i) const {
    const auto d = static_cast<std::size_t>(feature_dim);
    return std::span<const float>(features).subspan(i * d, d);
}

std::span<float> GaussianSet::feature_of(std::size_t i) {
    const auto d = static_cast<std::size_t>(feature_dim);
    return std::span<float>(features).subspan(i * d, d);
}

GaussianSet GaussianSet::zeros_like() const {
    GaussianSet z(sh_degree, feature_dim);
    z.features_present = features_present;
    z.resize(size());
    return z;
}

void GaussianSet::check_consistent() const {
    const std::size_t n = size();
    check_degree(sh_degree);
    if (feature_dim < 0) {
        throw FormatError("negative feature dimension");
    }
    if (positions.size() != n * 3 || rotations.size() != n * 4 || log_scales.size() != n * 3 ||
        sh.size() != n * static_cast<std::size_t>(sh_coeffs()) * 3 ||
        features.size() != n * static_cast<std::size_t>(feature_dim)) {
        throw FormatError("Gaussian set arrays disagree with its size of " + std::to_string(n));
    }
}

Eigen::Matrix3d quaternion_to_rotation(const Eigen::Vector4d& q_raw) {
    const double norm = q_raw.norm();
    if (!(norm > 0.0)) {
        throw Error("zero quaternion cannot encode a rotation");
    }
    const Eigen::Vector4d q = q_raw / norm;
    const double w = q[0];
    const double x = q[1];
    const double y = q[2];
    const double z = q[3];
    Eigen::Matrix3d r;
    r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y), //
        2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),  //
        2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
    return r;
}

Eigen::Matrix3d build_covariance(const Eigen::Vector4d& q, const Eigen::Vector3d& log_scales) {
    const Eigen::Matrix3d m = quaternion_to_rotation(q) * log_scales.array().exp().matrix().asDiagonal();
    return m * m.transpose();
}

CovarianceGrad build_covariance_backward(const Eigen::Vector4d& q_raw, const Eigen::Vector3d& log_scales,
                                         const Eigen::Matrix3d& d_cov) {
    const Eigen::Matrix3d r = quaternion_to_rotation(q_raw);
    const Eigen::Vector3d s = log_scales.array().exp();
    const Eigen::Matrix3d m = r * s.asDiagonal();
    const Eigen::Matrix3d dm = (d_cov + d_cov.transpose()) * m;

    CovarianceGrad out;
    Eigen::Matrix3d dr;
    for (int j = 0; j < 3; ++j) {
        dr.col(j) = dm.col(j) * s[j];
        out.d_log_scales[j] = dm.col(j).dot(r.col(j)) * s[j];
    }

    const double norm = q_raw.norm();
    const Eigen::Vector4d q = q_raw / norm;
    const double w = q[0];
    const double x = q[1];
    const double y = q[2];
    const double z = q[3];
    const Eigen::Vector4d dq_unit(
        2.0 * (-z * dr(0, 1) + y * dr(0, 2) + z * dr(1, 0) - x * dr(1, 2) - y * dr(2, 0) + x * dr(2, 1)),
        2.0 * (y * dr(0, 1) + z * dr(0, 2) + y * dr(1, 0) - 2.0 * x * dr(1, 1) - w * dr(1, 2) + z * dr(2, 0) +
               w * dr(2, 1) - 2.0 * x * dr(2, 2)),
        2.0 * (-2.0 * y * dr(0, 0) + x * dr(0, 1) + w * dr(0, 2) + x * dr(1, 0) + z * dr(1, 2) - w * dr(2, 0) +
               z * dr(2, 1) - 2.0 * y * dr(2, 2)),
        2.0 * (-2.0 * z * dr(0, 0) - w * dr(0, 1) + x * dr(0, 2) + w * dr(1, 0) - 2.0 * z * dr(1, 1) +
               y * dr(1, 2) + x * dr(2, 0) + y * dr(2, 1)));
    // Project out the radial component: the rotation only sees q / |q|.
    out.d_rotation = (dq_unit - q * q.dot(dq_unit)) / norm;
    return out;
}

void sh_basis(int degree, const Eigen::Vector3d& dir, std::span<double> out) {
    check_degree(degree);
    if (out.size() < static_cast<std::size_t>(sh_coeff_count(degree))) {
        throw ShapeError("sh_basis output too short");
    }
    basis<double>(degree, dir.x(), dir.y(), dir.z(), out.data());
}

Eigen::Vector3d sh_to_color(std::span<const float> sh, const Eigen::Vector3d& dir, int degree) {
    check_degree(degree);
    const int k = sh_coeff_count(degree);
    if (sh.size() < static_cast<std::size_t>(k) * 3) {
        throw ShapeError("sh_to_color: " + std::to_string(sh.size()) + " coefficients for degree " +
                         std::to_string(degree));
    }
    std::array<double, 16> y{};
    basis<double>(degree, dir.x(), dir.y(), dir.z(), y.data());
    Eigen::Vector3d rgb = Eigen::Vector3d::Constant(0.5);
    for (int i = 0; i < k; ++i) {
        for (int c = 0; c < 3; ++c) {
            rgb[c] += y[static_cast<std::size_t>(i)] * sh[static_cast<std::size_t>(i * 3 + c)];
        }
    }
    return rgb.cwiseMax(0.0);
}

ShColorGrad sh_to_color_backward(std::span<const float> sh, const Eigen::Vector3d& dir, int degree,
                                 const Eigen::Vector3d& d_color) {
    check_degree(degree);
    const int k = sh_coeff_count(degree);
    std::array<Dual3, 16> y{};
    basis<Dual3>(degree, Dual3::var(dir.x(), 0), Dual3::var(dir.y(), 1), Dual3::var(dir.z(), 2), y.data());

    Eigen::Vector3d raw = Eigen::Vector3d::Constant(0.5);
    for (int i = 0; i < k; ++i) {
        for (int c = 0; c < 3; ++c) {
            raw[c] += y[static_cast<std::size_t>(i)].v * sh[static_cast<std::size_t>(i * 3 + c)];
        }
    }
    ShColorGrad out;
    out.d_sh.assign(static_cast<std::size_t>(k) * 3, 0.0);
    for (int c = 0; c < 3; ++c) {
        if (raw[c] < 0.0) {
            continue;
        }
        for (int i = 0; i < k; ++i) {
            const auto& yi = y[static_cast<std::size_t>(i)];
            const double coeff = sh[static_cast<std::size_t>(i * 3 + c)];
            out.d_sh[static_cast<std::size_t>(i * 3 + c)] += d_color[c] * yi.v;
            for (int a = 0; a < 3; ++a) {
                out.d_dir[a] += d_color[c] * coeff * yi.d[static_cast<std::size_t>(a)];
            }
        }
    }
    return out;
}

ActivatedGaussian activate(const FeatureGaussian& g) {
    ActivatedGaussian a;
    a.mean = g.position;
    a.covariance = build_covariance(g.rotation, g.log_scales);
    a.alpha = sigmoid(g.opacity_logit);
    a.feature = g.feature;
    return a;
}

} // namespace splatstyle
