// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatstyle/consistency.hpp"

#include "splatstyle/errors.hpp"
#include "splatstyle/rasterizer.hpp"

#include <cmath>
#include <limits>
#include <map>

using nlohmann::json;

namespace splatstyle {
namespace {

struct SquaredError {
    double sum = 0.0;
    std::size_t count = 0;

    void add(const Grid& a, const Grid& b, const MatchSet& m, std::span<const float> weights) {
        if (a.channels() != b.channels()) {
            throw ShapeError("consistency_rmse: channel counts differ (" + a.shape().str() + " vs " + b.shape().str() +
                             ")");
        }
        if (!weights.empty() && weights.size() != static_cast<std::size_t>(a.channels())) {
            throw ShapeError("consistency_rmse: " + std::to_string(weights.size()) + " weights for " +
                             std::to_string(a.channels()) + " channels");
        }
        for (const auto& p : m.pairs) {
            if (p.ax < 0 || p.ay < 0 || p.ax >= a.width() || p.ay >= a.height() || p.bx < 0 || p.by < 0 ||
                p.bx >= b.width() || p.by >= b.height()) {
                throw ShapeError("consistency_rmse: match outside the grids");
            }
            for (int c = 0; c < a.channels(); ++c) {
                const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(c)];
                const double d = w * (static_cast<double>(a(c, p.ay, p.ax)) - b(c, p.by, p.bx));
                sum += d * d;
            }
        }
        count += m.size() * static_cast<std::size_t>(a.channels());
    }

    [[nodiscard]] double rmse() const { return std::sqrt(sum / static_cast<double>(count)); }
};

json views_json(const std::vector<std::pair<int, int>>& views) {
    json out = json::array();
    for (const auto& [a, b] : views) {
        out.push_back({a, b});
    }
    return out;
}

} // namespace

MatchSet build_matches(const GaussianSet& gaussians, const Camera& cam_a, const Camera& cam_b,
                       const MatchOptions& options) {
    const RenderOutput ra = rasterize(gaussians, cam_a);
    const RenderOutput rb = rasterize(gaussians, cam_b);
    const double tol = options.depth_tolerance * options.scene_scale;
    MatchSet out;
    for (int ay = 0; ay < cam_a.height; ++ay) {
        for (int ax = 0; ax < cam_a.width; ++ax) {
            if (ra.alpha(0, ay, ax) < options.min_alpha) {
                continue;
            }
            const Eigen::Vector3d world = cam_a.unproject(ax + 0.5, ay + 0.5, ra.depth(0, ay, ax));
            double db = 0.0;
            const Eigen::Vector2d uv = cam_b.project(world, &db);
            if (!(db > raster::kNearPlane) || uv.x() < 0 || uv.y() < 0 || uv.x() >= cam_b.width ||
                uv.y() >= cam_b.height) {
                continue;
            }
            const int bx = static_cast<int>(uv.x());
            const int by = static_cast<int>(uv.y());
            if (rb.alpha(0, by, bx) < options.min_alpha) {
                continue;
            }
            const double rendered = rb.depth(0, by, bx);
            if (std::abs(db - rendered) >= tol) {
                continue; // occluded in B, or a depth discontinuity
            }
            const Eigen::Vector3d back = cam_b.unproject(bx + 0.5, by + 0.5, rendered);
            double da = 0.0;
            const Eigen::Vector2d uva = cam_a.project(back, &da);
            if (!(da > raster::kNearPlane) ||
                (uva - Eigen::Vector2d(ax + 0.5, ay + 0.5)).norm() > options.round_trip_pixels) {
                continue;
            }
            out.pairs.push_back({ax, ay, bx, by});
        }
    }
    return out;
}

double consistency_rmse(const Grid& a, const Grid& b, const MatchSet& matches, std::span<const float> channel_weights) {
    if (matches.empty()) {
        throw ValidationError("consistency_rmse: empty match set, the metric is undefined");
    }
    SquaredError e;
    e.add(a, b, matches, channel_weights);
    return e.rmse();
}

json VariantReport::to_json() const {
    return {{"variant", variant}, {"rmse_rgb", rmse_rgb}, {"rmse_feature", rmse_feature},
            {"n_matches", n_matches}, {"views", views_json(views)},  {"style", style}};
}

double AblationReport::ratio() const {
    return integrated.rmse_rgb > 0.0 ? view_specific.rmse_rgb / integrated.rmse_rgb
                                     : std::numeric_limits<double>::infinity();
}

json AblationReport::to_json() const {
    const double r = ratio();
    return {{"variant", "both"},
            {"reports", json::array({integrated.to_json(), view_specific.to_json()})},
            {"ratio", std::isfinite(r) ? json(r) : json(nullptr)}};
}

VariantReport evaluate_variant(const GaussianSet& gaussians, const std::vector<Camera>& cameras,
                               const std::vector<std::pair<int, int>>& views, const StyleCode& code,
                               const StylizerModel& model, bool renormalize, const MatchOptions& options,
                               const std::string& style_name) {
    VariantReport r;
    r.variant = renormalize ? "view-specific" : "integrated";
    r.views = views;
    r.style = style_name;
    std::map<int, StylizedView> cache;
    auto view = [&](int i) -> const StylizedView& {
        if (i < 0 || static_cast<std::size_t>(i) >= cameras.size()) {
            throw ConfigError("view index " + std::to_string(i) + " out of range (" + std::to_string(cameras.size()) +
                              " views)");
        }
        auto it = cache.find(i);
        if (it == cache.end()) {
            it = cache.emplace(i, stylize_view(gaussians, cameras[static_cast<std::size_t>(i)], code, model, renormalize))
                     .first;
        }
        return it->second;
    };
    SquaredError rgb;
    SquaredError feat;
    for (const auto& [a, b] : views) {
        const StylizedView& va = view(a);
        const StylizedView& vb = view(b);
        MatchSet m = build_matches(gaussians, cameras[static_cast<std::size_t>(a)],
                                   cameras[static_cast<std::size_t>(b)], options);
        m.view_a = a;
        m.view_b = b;
        rgb.add(va.image, vb.image, m, {});
        feat.add(va.styled, vb.styled, m, {});
        r.n_matches += m.size();
    }
    if (r.n_matches == 0) {
        throw ValidationError("consistency evaluation: the view pairs share no matched pixels");
    }
    r.rmse_rgb = rgb.rmse();
    r.rmse_feature = feat.rmse();
    return r;
}

AblationReport ablation_compare(const GaussianSet& gaussians, const std::vector<Camera>& cameras,
                                const std::vector<std::pair<int, int>>& views, const StyleCode& code,
                                const StylizerModel& model, const MatchOptions& options,
                                const std::string& style_name) {
    return {evaluate_variant(gaussians, cameras, views, code, model, false, options, style_name),
            evaluate_variant(gaussians, cameras, views, code, model, true, options, style_name)};
}

std::string validate_report_json(const json& report) {
    if (!report.is_object()) {
        return "report must be an object";
    }
    if (report.contains("reports")) {
        if (report.value("variant", "") != "both") {
            return "a report with sub-reports must have variant 'both'";
        }
        if (!report["reports"].is_array() || report["reports"].size() != 2) {
            return "'reports' must hold exactly two variant reports";
        }
        if (!report.contains("ratio") || !(report["ratio"].is_number() || report["ratio"].is_null())) {
            return "'ratio' must be a number or null";
        }
        for (const auto& r : report["reports"]) {
            if (auto e = validate_report_json(r); !e.empty()) {
                return e;
            }
        }
        return {};
    }
    const std::pair<const char*, json::value_t> fields[] = {
        {"variant", json::value_t::string},  {"rmse_rgb", json::value_t::number_float},
        {"rmse_feature", json::value_t::number_float}, {"n_matches", json::value_t::number_unsigned},
        {"views", json::value_t::array},     {"style", json::value_t::string},
    };
    for (const auto& [key, type] : fields) {
        if (!report.contains(key)) {
            return std::string("missing key '") + key + "'";
        }
        const json& v = report[key];
        const bool ok = type == json::value_t::number_float    ? v.is_number()
                        : type == json::value_t::number_unsigned ? v.is_number_integer() && v.get<long long>() >= 0
                                                                 : v.type() == type;
        if (!ok) {
            return std::string("key '") + key + "' has the wrong type";
        }
    }
    const std::string variant = report["variant"];
    if (variant != "integrated" && variant != "view-specific") {
        return "unknown variant '" + variant + "'";
    }
    for (const auto& pair : report["views"]) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() || !pair[1].is_number_integer()) {
            return "'views' entries must be [a, b] index pairs";
        }
    }
    if (report.size() != std::size(fields)) {
        return "unexpected keys in variant report";
    }
    return {};
}

} // namespace splatstyle
