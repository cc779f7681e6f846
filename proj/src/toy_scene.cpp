// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatstyle/toy_scene.hpp"

#include "splatstyle/errors.hpp"
#include "splatstyle/image_io.hpp"
#include "splatstyle/rasterizer.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <random>

namespace splatstyle {
namespace {

constexpr double kShC0 = 0.28209479177387814;
constexpr double kBallRadius = 0.55;
constexpr double kWallZ = -1.0;
constexpr double kWallHalfWidth = 1.6;
constexpr double kWallHalfHeight = 1.4;

/// (w, x, y, z) quaternion of a rotation whose third column is `normal`.
Eigen::Vector4d frame_quaternion(const Eigen::Vector3d& normal) {
    const Eigen::Vector3d n = normal.normalized();
    const Eigen::Vector3d helper = std::abs(n.y()) < 0.9 ? Eigen::Vector3d::UnitY() : Eigen::Vector3d::UnitX();
    const Eigen::Vector3d t = helper.cross(n).normalized();
    Eigen::Matrix3d r;
    r.col(0) = t;
    r.col(1) = n.cross(t);
    r.col(2) = n;
    const Eigen::Quaterniond q(r);
    return {q.w(), q.x(), q.y(), q.z()};
}

FeatureGaussian disk(const Eigen::Vector3d& pos, const Eigen::Vector3d& normal, double radius,
                     const Eigen::Vector3d& rgb) {
    FeatureGaussian g;
    g.position = pos;
    g.rotation = frame_quaternion(normal);
    g.log_scales = {std::log(radius), std::log(radius), std::log(radius * 0.2)};
    g.opacity_logit = 4.0;
    g.sh.assign(static_cast<std::size_t>(sh_coeff_count(kMaxShDegree)) * 3, 0.0f);
    for (int c = 0; c < 3; ++c) {
        g.sh[static_cast<std::size_t>(c)] = static_cast<float>((rgb[c] - 0.5) / kShC0);
    }
    g.feature.assign(kDefaultFeatureDim, 0.0f);
    return g;
}

Eigen::Vector3d random_color(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.1, 0.9);
    return {u(rng), u(rng), u(rng)};
}

Grid quantized(const Grid& g) {
    Grid out = g;
    for (auto& v : out.values()) {
        v = static_cast<float>(quantize_unit(v)) / 255.0f;
    }
    return out;
}

} // namespace

ToyScene make_toy_scene(const ToySceneOptions& o) {
    if (o.views < 1 || o.size < 8 || o.gaussians < 20) {
        throw ConfigError("toy scene needs >= 1 view, size >= 8 and >= 20 Gaussians");
    }
    constexpr double pi = std::numbers::pi;
    std::mt19937_64 rng(o.seed);
    ToyScene scene;
    scene.truth = GaussianSet(kMaxShDegree, kDefaultFeatureDim);
    scene.truth.features_present = false;

    // Ball: Fibonacci lattice of disks tangent to the sphere.
    const int n_ball = o.gaussians / 2;
    const double ball_spacing = kBallRadius * std::sqrt(4.0 * pi / n_ball);
    const double golden = pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n_ball; ++i) {
        const double y = 1.0 - 2.0 * (i + 0.5) / n_ball;
        const double r = std::sqrt(1.0 - y * y);
        const double phi = golden * i;
        const Eigen::Vector3d n(r * std::cos(phi), y, r * std::sin(phi));
        const double lon = std::atan2(n.z(), n.x());
        const Eigen::Vector3d rgb(0.5 + 0.4 * std::sin(3 * lon), 0.5 + 0.4 * std::sin(3 * lon + 2.1),
                                  0.5 + 0.4 * std::cos(2.5 * std::acos(y)));
        scene.truth.push_back(disk(kBallRadius * n, n, 0.7 * ball_spacing, rgb));
    }

    // Wall: a grid of disks facing +z, colored as a 4 x 4 checkerboard of two random colors.
    const int n_wall = o.gaussians - n_ball;
    const double aspect = kWallHalfWidth / kWallHalfHeight;
    const int cols = std::max(2, static_cast<int>(std::floor(std::sqrt(n_wall * aspect))));
    const int rows = std::max(2, n_wall / cols);
    const Eigen::Vector3d ca = random_color(rng);
    const Eigen::Vector3d cb = random_color(rng);
    const double dx = 2 * kWallHalfWidth / cols;
    const double dy = 2 * kWallHalfHeight / rows;
    for (int row = 0; row < rows; ++row) {
        for (int col = 0; col < cols; ++col) {
            const double x = -kWallHalfWidth + (col + 0.5) * dx;
            const double y = -kWallHalfHeight + (row + 0.5) * dy;
            const bool odd = ((col * 4 / cols) + (row * 4 / rows)) % 2 == 1;
            scene.truth.push_back(disk({x, y, kWallZ}, Eigen::Vector3d::UnitZ(), 0.6 * std::max(dx, dy), odd ? ca : cb));
        }
    }

    const double focal = 1.1 * o.size;
    for (int v = 0; v < o.views; ++v) {
        const double a = o.views == 1 ? 0.0 : (-25.0 + 50.0 * v / (o.views - 1)) * pi / 180.0;
        const Eigen::Vector3d eye(3.0 * std::sin(a), 0.6, 3.0 * std::cos(a));
        const Camera cam = Camera::look_at(eye, Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitY(), focal, o.size, o.size);
        scene.dataset.cameras.push_back(cam);
        scene.dataset.images.push_back(quantized(rasterize(scene.truth, cam).color));
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%03d.png", v);
        scene.dataset.files.emplace_back(name);
    }

    scene.init = scene.truth;
    std::normal_distribution<double> jitter(0.0, 1.0);
    for (auto& p : scene.init.positions) {
        p += static_cast<float>(0.02 * jitter(rng));
    }
    for (auto& s : scene.init.log_scales) {
        s += static_cast<float>(0.1 * jitter(rng));
    }
    std::fill(scene.init.opacity_logits.begin(), scene.init.opacity_logits.end(), 0.0f);
    std::fill(scene.init.sh.begin(), scene.init.sh.end(), 0.0f);
    return scene;
}

std::vector<Grid> make_toy_styles(int count, int size, std::uint64_t seed) {
    constexpr double pi = std::numbers::pi;
    std::vector<Grid> out;
    for (int i = 0; i < count; ++i) {
        std::mt19937_64 rng(seed * 7919 + static_cast<std::uint64_t>(i));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const Eigen::Vector3d a = random_color(rng);
        const Eigen::Vector3d b = random_color(rng);
        const double freq = 2.0 + 6.0 * u(rng);
        const double angle = pi * u(rng);
        Grid g(3, size, size);
        std::vector<Eigen::Vector3d> blobs;
        for (int k = 0; k < 6; ++k) {
            blobs.emplace_back(u(rng) * size, u(rng) * size, (0.05 + 0.15 * u(rng)) * size);
        }
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                const double px = static_cast<double>(x) / size;
                const double py = static_cast<double>(y) / size;
                const double along = std::cos(angle) * px + std::sin(angle) * py;
                double t = 0.0;
                switch (i % 4) {
                case 0: // stripes
                    t = 0.5 + 0.5 * std::sin(2 * pi * freq * along);
                    break;
                case 1: // checkers
                    t = (static_cast<int>(std::floor(px * freq)) + static_cast<int>(std::floor(py * freq))) % 2;
                    break;
                case 2: // blobs
                    for (const auto& bl : blobs) {
                        const double d2 = (x - bl.x()) * (x - bl.x()) + (y - bl.y()) * (y - bl.y());
                        t += std::exp(-d2 / (2 * bl.z() * bl.z()));
                    }
                    t = std::min(t, 1.0);
                    break;
                default: // rings
                    t = 0.5 + 0.5 * std::cos(2 * pi * freq * std::hypot(px - 0.5, py - 0.5));
                    break;
                }
                for (int c = 0; c < 3; ++c) {
                    g(c, y, x) = static_cast<float>((1 - t) * a[c] + t * b[c]);
                }
            }
        }
        out.push_back(quantized(g));
    }
    return out;
}

std::vector<Grid> make_toy_contents(int count, int size, std::uint64_t seed) {
    std::vector<Grid> out;
    for (int i = 0; i < count; ++i) {
        std::mt19937_64 rng(seed * 104729 + static_cast<std::uint64_t>(i));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const Eigen::Vector3d top = random_color(rng);
        const Eigen::Vector3d bottom = random_color(rng);
        Grid g(3, size, size);
        for (int y = 0; y < size; ++y) {
            const double t = static_cast<double>(y) / std::max(1, size - 1);
            for (int x = 0; x < size; ++x) {
                for (int c = 0; c < 3; ++c) {
                    g(c, y, x) = static_cast<float>((1 - t) * top[c] + t * bottom[c]);
                }
            }
        }
        for (int k = 0; k < 5; ++k) {
            const double bx = u(rng) * size;
            const double by = u(rng) * size;
            const double br = (0.08 + 0.2 * u(rng)) * size;
            const Eigen::Vector3d col = random_color(rng);
            for (int y = 0; y < size; ++y) {
                for (int x = 0; x < size; ++x) {
                    const double w = std::exp(-((x - bx) * (x - bx) + (y - by) * (y - by)) / (2 * br * br));
                    for (int c = 0; c < 3; ++c) {
                        g(c, y, x) = static_cast<float>((1 - w) * g(c, y, x) + w * col[c]);
                    }
                }
            }
        }
        out.push_back(quantized(g));
    }
    return out;
}

} // namespace splatstyle
