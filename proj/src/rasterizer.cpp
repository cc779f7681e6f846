// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatstyle/rasterizer.hpp"

#include "splatstyle/errors.hpp"
#include "splatstyle/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace splatstyle {
namespace {

using Mat23 = Eigen::Matrix<double, 2, 3>;

/// Everything the projection backward needs besides the Gaussian parameters.
struct ProjectionCache {
    Eigen::Vector3d p_cam;
    Mat23 jw; ///< J * W
    Eigen::Matrix3d cov3;
};

std::optional<Splat2D> project_with_cache(const Eigen::Vector3d& mean, const Eigen::Matrix3d& cov3, double alpha,
                                          const Camera& cam, ProjectionCache* cache) {
    const Eigen::Matrix3d w = cam.world_rotation();
    const Eigen::Vector3d p = w * (mean - cam.center());
    const double d = -p.z();
    if (!(d > raster::kNearPlane)) {
        return std::nullopt;
    }
    Mat23 j;
    j << cam.fx / d, 0.0, cam.fx * p.x() / (d * d), //
        0.0, -cam.fy / d, -cam.fy * p.y() / (d * d);
    const Mat23 jw = j * w;

    Splat2D s;
    s.mean2d = Eigen::Vector2d(cam.cx + cam.fx * p.x() / d, cam.cy - cam.fy * p.y() / d);
    s.cov2d = jw * cov3 * jw.transpose();
    s.cov2d = 0.5 * (s.cov2d + s.cov2d.transpose());
    s.cov2d.diagonal().array() += raster::kDilation;
    const double det = s.cov2d.determinant();
    if (!(det > 0.0) || !s.mean2d.allFinite()) {
        return std::nullopt;
    }
    s.conic = Eigen::Vector3d(s.cov2d(1, 1) / det, -s.cov2d(0, 1) / det, s.cov2d(0, 0) / det);
    s.depth = d;
    s.alpha = alpha;

    const double mid = 0.5 * (s.cov2d(0, 0) + s.cov2d(1, 1));
    const double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
    const double radius = 3.0 * std::sqrt(lambda_max);
    // Pixel x has its center at x + 0.5.
    const double fx0 = std::floor(s.mean2d.x() - radius - 0.5);
    const double fx1 = std::ceil(s.mean2d.x() + radius - 0.5);
    const double fy0 = std::floor(s.mean2d.y() - radius - 0.5);
    const double fy1 = std::ceil(s.mean2d.y() + radius - 0.5);
    if (fx1 < 0.0 || fy1 < 0.0 || fx0 > cam.width - 1 || fy0 > cam.height - 1) {
        return std::nullopt;
    }
    s.x_min = static_cast<int>(std::max(0.0, fx0));
    s.y_min = static_cast<int>(std::max(0.0, fy0));
    s.x_max = static_cast<int>(std::min<double>(cam.width - 1, fx1));
    s.y_max = static_cast<int>(std::min<double>(cam.height - 1, fy1));
    if (cache != nullptr) {
        cache->p_cam = p;
        cache->jw = jw;
        cache->cov3 = cov3;
    }
    return s;
}

Eigen::Vector3d view_direction(const Eigen::Vector3d& mean, const Camera& cam, double* length = nullptr) {
    const Eigen::Vector3d v = mean - cam.center();
    const double n = v.norm();
    if (length != nullptr) {
        *length = n;
    }
    return n > 0.0 ? Eigen::Vector3d(v / n) : Eigen::Vector3d(0.0, 0.0, 1.0);
}

struct ProjectedSet {
    std::vector<Splat2D> splats; ///< depth-sorted
};

ProjectedSet project_all(const GaussianSet& gs, const Camera& cam) {
    gs.check_consistent();
    ProjectedSet out;
    out.splats.reserve(gs.size());
    for (std::size_t i = 0; i < gs.size(); ++i) {
        const Eigen::Vector3d mean = gs.position(i);
        const Eigen::Vector4d q(gs.rotations[i * 4], gs.rotations[i * 4 + 1], gs.rotations[i * 4 + 2],
                                gs.rotations[i * 4 + 3]);
        const Eigen::Vector3d ls(gs.log_scales[i * 3], gs.log_scales[i * 3 + 1], gs.log_scales[i * 3 + 2]);
        auto s = project_with_cache(mean, build_covariance(q, ls), sigmoid(gs.opacity_logits[i]), cam, nullptr);
        if (!s) {
            continue;
        }
        s->source = static_cast<int>(i);
        s->color = view_color(gs, i, cam);
        auto f = gs.feature_of(i);
        s->feature.assign(f.begin(), f.end());
        out.splats.push_back(std::move(*s));
    }
    std::sort(out.splats.begin(), out.splats.end(), [](const Splat2D& a, const Splat2D& b) {
        return a.depth < b.depth || (a.depth == b.depth && a.source < b.source);
    });
    return out;
}

void check_sorted(std::span<const Splat2D> splats) {
    for (std::size_t i = 1; i < splats.size(); ++i) {
        const auto& a = splats[i - 1];
        const auto& b = splats[i];
        if (b.depth < a.depth || (b.depth == a.depth && b.source < a.source)) {
            throw Error("composite: splats must be sorted by ascending depth (ties by source index)");
        }
    }
}

struct TileBins {
    int tiles_x = 0;
    int tiles_y = 0;
    std::vector<std::vector<int>> lists;

    [[nodiscard]] const std::vector<int>& at(int tx, int ty) const {
        return lists[static_cast<std::size_t>(ty * tiles_x + tx)];
    }
};

TileBins bin_splats(std::span<const Splat2D> splats, int height, int width) {
    TileBins bins;
    bins.tiles_x = (width + raster::kTileSize - 1) / raster::kTileSize;
    bins.tiles_y = (height + raster::kTileSize - 1) / raster::kTileSize;
    bins.lists.resize(static_cast<std::size_t>(bins.tiles_x * bins.tiles_y));
    for (std::size_t i = 0; i < splats.size(); ++i) {
        const auto& s = splats[i];
        const int x0 = std::max(0, s.x_min);
        const int y0 = std::max(0, s.y_min);
        const int x1 = std::min(width - 1, s.x_max);
        const int y1 = std::min(height - 1, s.y_max);
        if (x1 < x0 || y1 < y0) {
            continue;
        }
        for (int ty = y0 / raster::kTileSize; ty <= y1 / raster::kTileSize; ++ty) {
            for (int tx = x0 / raster::kTileSize; tx <= x1 / raster::kTileSize; ++tx) {
                bins.lists[static_cast<std::size_t>(ty * bins.tiles_x + tx)].push_back(static_cast<int>(i));
            }
        }
    }
    return bins;
}

struct Contribution {
    int splat = 0;
    double g = 0.0;           ///< clamped opacity at this pixel
    double falloff = 0.0;     ///< exp(power)
    double transmittance = 0; ///< T before this splat
    double dx = 0.0;
    double dy = 0.0;
    bool clamped = false;
};

/// Walks the pixel's splats front to back and records each contributor. Returns the final T.
double pixel_contributions(std::span<const Splat2D> splats, const std::vector<int>& list, int px, int py,
                           std::vector<Contribution>& out) {
    out.clear();
    const double cx = px + 0.5;
    const double cy = py + 0.5;
    double t = 1.0;
    for (int idx : list) {
        const Splat2D& s = splats[static_cast<std::size_t>(idx)];
        if (px < s.x_min || px > s.x_max || py < s.y_min || py > s.y_max) {
            continue;
        }
        const double dx = cx - s.mean2d.x();
        const double dy = cy - s.mean2d.y();
        const double power = -0.5 * (s.conic[0] * dx * dx + 2.0 * s.conic[1] * dx * dy + s.conic[2] * dy * dy);
        if (power < raster::kMinExponent) {
            continue;
        }
        const double falloff = std::exp(power);
        const double raw = s.alpha * falloff;
        Contribution c;
        c.splat = idx;
        c.clamped = raw > raster::kMaxAlpha;
        c.g = c.clamped ? raster::kMaxAlpha : raw;
        c.falloff = falloff;
        c.transmittance = t;
        c.dx = dx;
        c.dy = dy;
        out.push_back(c);
        t *= 1.0 - c.g;
        if (t < raster::kMinTransmittance) {
            break;
        }
    }
    return t;
}

RenderOutput composite_binned(std::span<const Splat2D> splats, const TileBins& bins, int feature_dim, int height,
                              int width) {
    RenderOutput out;
    out.color = Grid(3, height, width);
    out.feature = Grid(feature_dim, height, width);
    out.alpha = Grid(1, height, width);
    out.depth = Grid(1, height, width);
    const auto d = static_cast<std::size_t>(feature_dim);
    // Color and feature values of each splat side by side, accumulated by one loop so a feature
    // channel holding a splat's color composites to the same bits.
    const std::size_t stride = 3 + d;
    std::vector<double> payload(splats.size() * stride);
    for (std::size_t i = 0; i < splats.size(); ++i) {
        double* p = payload.data() + i * stride;
        for (int ch = 0; ch < 3; ++ch) {
            p[ch] = splats[i].color[ch];
        }
        for (std::size_t k = 0; k < d; ++k) {
            p[3 + k] = splats[i].feature[k];
        }
    }
    parallel_chunks(bins.tiles_y, [&](int ty) {
        std::vector<Contribution> contrib;
        std::vector<double> acc(stride);
        for (int tx = 0; tx < bins.tiles_x; ++tx) {
            const auto& list = bins.at(tx, ty);
            for (int py = ty * raster::kTileSize; py < std::min(height, (ty + 1) * raster::kTileSize); ++py) {
                for (int px = tx * raster::kTileSize; px < std::min(width, (tx + 1) * raster::kTileSize); ++px) {
                    const double t = pixel_contributions(splats, list, px, py, contrib);
                    std::fill(acc.begin(), acc.end(), 0.0);
                    double depth = 0.0;
                    for (const auto& c : contrib) {
                        const double w = c.g * c.transmittance;
                        const double* p = payload.data() + static_cast<std::size_t>(c.splat) * stride;
                        for (std::size_t k = 0; k < stride; ++k) {
                            acc[k] += w * p[k];
                        }
                        depth += w * splats[static_cast<std::size_t>(c.splat)].depth;
                    }
                    for (int ch = 0; ch < 3; ++ch) {
                        out.color(ch, py, px) = static_cast<float>(acc[static_cast<std::size_t>(ch)]);
                    }
                    for (std::size_t k = 0; k < d; ++k) {
                        out.feature(static_cast<int>(k), py, px) = static_cast<float>(acc[3 + k]);
                    }
                    const double alpha = 1.0 - t;
                    out.alpha(0, py, px) = static_cast<float>(alpha);
                    out.depth(0, py, px) = alpha > 0.0 ? static_cast<float>(depth / alpha) : 0.0f;
                }
            }
        }
    });
    return out;
}

/// Per-splat screen-space gradients accumulated over pixels.
struct SplatGrad {
    double mean2d[2] = {0.0, 0.0};
    double conic[3] = {0.0, 0.0, 0.0}; ///< dL/dK00, dL/dK01 (= dL/dK10), dL/dK11 of the full matrix
    double alpha = 0.0;
    double color[3] = {0.0, 0.0, 0.0};
};

} // namespace

std::optional<Splat2D> project(const ActivatedGaussian& g, const Camera& cam) {
    auto s = project_with_cache(g.mean, g.covariance, g.alpha, cam, nullptr);
    if (s) {
        s->feature = g.feature;
    }
    return s;
}

RenderOutput composite(std::span<const Splat2D> splats, int feature_dim, int height, int width) {
    check_sorted(splats);
    for (const auto& s : splats) {
        if (s.feature.size() != static_cast<std::size_t>(feature_dim)) {
            throw ShapeError("composite: splat feature size " + std::to_string(s.feature.size()) +
                             " != feature_dim " + std::to_string(feature_dim));
        }
    }
    return composite_binned(splats, bin_splats(splats, height, width), feature_dim, height, width);
}

Eigen::Vector3d view_color(const GaussianSet& gaussians, std::size_t i, const Camera& cam) {
    // Rounded through float so a feature channel holding the same color composites identically.
    const Eigen::Vector3d c =
        sh_to_color(gaussians.sh_of(i), view_direction(gaussians.position(i), cam), gaussians.sh_degree);
    const Eigen::Vector3f rounded = c.cast<float>();
    return {rounded.x(), rounded.y(), rounded.z()};
}

RenderOutput rasterize(const GaussianSet& gaussians, const Camera& cam) {
    const ProjectedSet ps = project_all(gaussians, cam);
    return composite_binned(ps.splats, bin_splats(ps.splats, cam.height, cam.width), gaussians.feature_dim,
                            cam.height, cam.width);
}

GaussianSet rasterize_backward(const GaussianSet& gaussians, const Camera& cam, const Grid& d_color,
                               const Grid& d_feature, const BackwardOptions& options) {
    const int h = cam.height;
    const int w = cam.width;
    const int dim = gaussians.feature_dim;
    const bool has_dc = !d_color.empty();
    const bool has_df = !d_feature.empty();
    if (has_dc && d_color.shape() != Shape3{3, h, w}) {
        throw ShapeError("rasterize_backward: d_color " + d_color.shape().str() + " does not match " +
                         Shape3{3, h, w}.str());
    }
    if (has_df && d_feature.shape() != Shape3{dim, h, w}) {
        throw ShapeError("rasterize_backward: d_feature " + d_feature.shape().str() + " does not match " +
                         Shape3{dim, h, w}.str());
    }

    GaussianSet grads = gaussians.zeros_like();
    if (!has_dc && !has_df) {
        return grads;
    }
    const ProjectedSet ps = project_all(gaussians, cam);
    const auto& splats = ps.splats;
    const TileBins bins = bin_splats(splats, h, w);
    const std::size_t n = splats.size();
    const auto d = static_cast<std::size_t>(dim);

    // One partial buffer per tile row, merged in row order for run-to-run identical sums.
    std::vector<std::vector<SplatGrad>> partial(static_cast<std::size_t>(bins.tiles_y));
    std::vector<std::vector<double>> partial_feat(static_cast<std::size_t>(bins.tiles_y));
    parallel_chunks(bins.tiles_y, [&](int ty) {
        auto& pg = partial[static_cast<std::size_t>(ty)];
        auto& pf = partial_feat[static_cast<std::size_t>(ty)];
        pg.assign(n, SplatGrad{});
        pf.assign(n * d, 0.0);
        std::vector<Contribution> contrib;
        std::vector<double> acc_f(d);
        std::vector<double> dF(d);
        for (int tx = 0; tx < bins.tiles_x; ++tx) {
            const auto& list = bins.at(tx, ty);
            if (list.empty()) {
                continue;
            }
            for (int py = ty * raster::kTileSize; py < std::min(h, (ty + 1) * raster::kTileSize); ++py) {
                for (int px = tx * raster::kTileSize; px < std::min(w, (tx + 1) * raster::kTileSize); ++px) {
                    pixel_contributions(splats, list, px, py, contrib);
                    if (contrib.empty()) {
                        continue;
                    }
                    Eigen::Vector3d dC = Eigen::Vector3d::Zero();
                    if (has_dc) {
                        dC = Eigen::Vector3d(d_color(0, py, px), d_color(1, py, px), d_color(2, py, px));
                    }
                    for (std::size_t k = 0; k < d; ++k) {
                        dF[k] = has_df ? d_feature(static_cast<int>(k), py, px) : 0.0;
                    }
                    Eigen::Vector3d acc_c = Eigen::Vector3d::Zero();
                    std::fill(acc_f.begin(), acc_f.end(), 0.0);
                    for (auto it = contrib.rbegin(); it != contrib.rend(); ++it) {
                        const Splat2D& s = splats[static_cast<std::size_t>(it->splat)];
                        SplatGrad& sg = pg[static_cast<std::size_t>(it->splat)];
                        double* fg = pf.data() + static_cast<std::size_t>(it->splat) * d;
                        const double weight = it->g * it->transmittance;
                        double dg = 0.0;
                        for (int c = 0; c < 3; ++c) {
                            sg.color[c] += weight * dC[c];
                            dg += (s.color[c] - acc_c[c]) * dC[c];
                        }
                        for (std::size_t k = 0; k < d; ++k) {
                            const double fk = s.feature[k];
                            fg[k] += weight * dF[k];
                            dg += (fk - acc_f[k]) * dF[k];
                            acc_f[k] = it->g * fk + (1.0 - it->g) * acc_f[k];
                        }
                        acc_c = it->g * s.color + (1.0 - it->g) * acc_c;
                        dg *= it->transmittance;
                        if (!options.geometry || it->clamped) {
                            continue;
                        }
                        sg.alpha += dg * it->falloff;
                        const double dpower = dg * it->g;
                        sg.mean2d[0] += dpower * (s.conic[0] * it->dx + s.conic[1] * it->dy);
                        sg.mean2d[1] += dpower * (s.conic[1] * it->dx + s.conic[2] * it->dy);
                        sg.conic[0] += -0.5 * dpower * it->dx * it->dx;
                        sg.conic[1] += -0.5 * dpower * it->dx * it->dy;
                        sg.conic[2] += -0.5 * dpower * it->dy * it->dy;
                    }
                }
            }
        }
    });

    std::vector<SplatGrad> total(n);
    std::vector<double> total_feat(n * d, 0.0);
    for (std::size_t row = 0; row < partial.size(); ++row) {
        for (std::size_t i = 0; i < n; ++i) {
            const SplatGrad& p = partial[row][i];
            SplatGrad& t = total[i];
            t.mean2d[0] += p.mean2d[0];
            t.mean2d[1] += p.mean2d[1];
            for (int k = 0; k < 3; ++k) {
                t.conic[k] += p.conic[k];
                t.color[k] += p.color[k];
            }
            t.alpha += p.alpha;
        }
        for (std::size_t k = 0; k < n * d; ++k) {
            total_feat[k] += partial_feat[row][k];
        }
    }

    const Eigen::Matrix3d wrot = cam.world_rotation();
    const std::size_t kcoef = static_cast<std::size_t>(gaussians.sh_coeffs()) * 3;
    for (std::size_t si = 0; si < n; ++si) {
        const Splat2D& s = splats[si];
        const SplatGrad& sg = total[si];
        const auto i = static_cast<std::size_t>(s.source);
        for (std::size_t k = 0; k < d; ++k) {
            grads.features[i * d + k] = static_cast<float>(total_feat[si * d + k]);
        }

        const Eigen::Vector3d mean = gaussians.position(i);
        double dist = 0.0;
        const Eigen::Vector3d dir = view_direction(mean, cam, &dist);
        const Eigen::Vector3d d_color(sg.color[0], sg.color[1], sg.color[2]);
        const ShColorGrad shg = sh_to_color_backward(gaussians.sh_of(i), dir, gaussians.sh_degree, d_color);
        for (std::size_t k = 0; k < kcoef; ++k) {
            grads.sh[i * kcoef + k] = static_cast<float>(shg.d_sh[k]);
        }
        if (!options.geometry) {
            continue;
        }

        const Eigen::Vector4d q(gaussians.rotations[i * 4], gaussians.rotations[i * 4 + 1],
                                gaussians.rotations[i * 4 + 2], gaussians.rotations[i * 4 + 3]);
        const Eigen::Vector3d ls(gaussians.log_scales[i * 3], gaussians.log_scales[i * 3 + 1],
                                 gaussians.log_scales[i * 3 + 2]);
        ProjectionCache cache;
        project_with_cache(mean, build_covariance(q, ls), s.alpha, cam, &cache);
        const Eigen::Vector3d& p = cache.p_cam;
        const double depth = -p.z();

        Eigen::Matrix2d conic;
        conic << s.conic[0], s.conic[1], s.conic[1], s.conic[2];
        Eigen::Matrix2d g_conic;
        g_conic << sg.conic[0], sg.conic[1], sg.conic[1], sg.conic[2];
        const Eigen::Matrix2d g_cov2 = -conic * g_conic * conic;
        const Mat23 g_jw = 2.0 * g_cov2 * cache.jw * cache.cov3;
        const Eigen::Matrix3d g_cov3 = cache.jw.transpose() * g_cov2 * cache.jw;
        const Mat23 g_j = g_jw * wrot.transpose();

        const double d2 = depth * depth;
        const double d3 = d2 * depth;
        Eigen::Vector3d g_p = Eigen::Vector3d::Zero();
        g_p.x() += g_j(0, 2) * cam.fx / d2 + sg.mean2d[0] * cam.fx / depth;
        g_p.y() += -g_j(1, 2) * cam.fy / d2 - sg.mean2d[1] * cam.fy / depth;
        g_p.z() += g_j(0, 0) * cam.fx / d2 - g_j(1, 1) * cam.fy / d2 + g_j(0, 2) * 2.0 * cam.fx * p.x() / d3 -
                   g_j(1, 2) * 2.0 * cam.fy * p.y() / d3 + sg.mean2d[0] * cam.fx * p.x() / d2 -
                   sg.mean2d[1] * cam.fy * p.y() / d2;
        Eigen::Vector3d g_mean = wrot.transpose() * g_p;
        if (dist > 0.0) {
            g_mean += (shg.d_dir - dir * dir.dot(shg.d_dir)) / dist;
        }
        const CovarianceGrad cg = build_covariance_backward(q, ls, g_cov3);
        for (int k = 0; k < 3; ++k) {
            grads.positions[i * 3 + static_cast<std::size_t>(k)] = static_cast<float>(g_mean[k]);
            grads.log_scales[i * 3 + static_cast<std::size_t>(k)] = static_cast<float>(cg.d_log_scales[k]);
        }
        for (int k = 0; k < 4; ++k) {
            grads.rotations[i * 4 + static_cast<std::size_t>(k)] = static_cast<float>(cg.d_rotation[k]);
        }
        grads.opacity_logits[i] = static_cast<float>(sg.alpha * s.alpha * (1.0 - s.alpha));
    }
    return grads;
}

} // namespace splatstyle
