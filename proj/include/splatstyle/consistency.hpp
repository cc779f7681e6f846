// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatstyle/camera.hpp"
#include "splatstyle/gaussian.hpp"
#include "splatstyle/grid.hpp"
#include "splatstyle/stylizer.hpp"

#include <json.hpp>

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace splatstyle {

/// Pixel (ax, ay) of view A and pixel (bx, by) of view B see the same surface point.
struct PixelMatch {
    int ax = 0;
    int ay = 0;
    int bx = 0;
    int by = 0;

    friend bool operator==(const PixelMatch&, const PixelMatch&) = default;
};

struct MatchSet {
    int view_a = 0;
    int view_b = 1;
    std::vector<PixelMatch> pairs;

    [[nodiscard]] std::size_t size() const { return pairs.size(); }
    [[nodiscard]] bool empty() const { return pairs.empty(); }
};

struct MatchOptions {
    double scene_scale = 1.0;
    double depth_tolerance = 0.01; ///< relative to scene_scale
    double min_alpha = 0.5;        ///< pixels below this accumulated opacity count as empty
    double round_trip_pixels = 1.0;
};

/// Unprojects every non-empty pixel of A at its expected depth, reprojects into B and keeps
/// the pair when the reprojected depth agrees with B's rendered depth and B's pixel maps back
/// within `round_trip_pixels` of the A pixel center. Pixels landing outside B or behind its
/// camera are dropped, so disjoint views give an empty set.
MatchSet build_matches(const GaussianSet& gaussians, const Camera& cam_a, const Camera& cam_b,
                       const MatchOptions& options = {});

/// Per-channel RMSE over matches: sqrt(sum (w_c (a - b))^2 / (n_matches * C)). Empty weights
/// mean w_c = 1. Throws ValidationError on an empty match set, ShapeError on channel mismatch.
double consistency_rmse(const Grid& a, const Grid& b, const MatchSet& matches,
                        std::span<const float> channel_weights = {});

/// One variant's numbers, pooled over all view pairs.
struct VariantReport {
    std::string variant; ///< "integrated" or "view-specific"
    double rmse_rgb = 0.0;
    double rmse_feature = 0.0;
    std::size_t n_matches = 0;
    std::vector<std::pair<int, int>> views;
    std::string style;

    [[nodiscard]] nlohmann::json to_json() const;
};

struct AblationReport {
    VariantReport integrated;
    VariantReport view_specific;
    /// view_specific.rmse_rgb / integrated.rmse_rgb (infinity when the latter is zero).
    [[nodiscard]] double ratio() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

/// Consistency of one pipeline variant over the given view pairs. Matches come from the
/// geometry alone and are shared by both variants. Throws ValidationError when no pair yields
/// a match.
VariantReport evaluate_variant(const GaussianSet& gaussians, const std::vector<Camera>& cameras,
                               const std::vector<std::pair<int, int>>& views, const StyleCode& code,
                               const StylizerModel& model, bool renormalize, const MatchOptions& options,
                               const std::string& style_name = "");

/// Integrated normalization (fixed affine map for every view) against the view-specific variant
/// that re-normalizes each rendered feature map before the style transform.
AblationReport ablation_compare(const GaussianSet& gaussians, const std::vector<Camera>& cameras,
                                const std::vector<std::pair<int, int>>& views, const StyleCode& code,
                                const StylizerModel& model, const MatchOptions& options,
                                const std::string& style_name = "");

/// Checks the report layout: required keys with the right JSON types. Returns an empty string
/// when valid, else a description of the first problem.
std::string validate_report_json(const nlohmann::json& report);

} // namespace splatstyle
