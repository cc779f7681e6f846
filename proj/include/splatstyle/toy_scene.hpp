// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatstyle/gaussian.hpp"
#include "splatstyle/grid.hpp"
#include "splatstyle/scene_io.hpp"

#include <cstdint>
#include <vector>

namespace splatstyle {

struct ToySceneOptions {
    int views = 5;
    int size = 64;
    int gaussians = 400; ///< split between a colored ball and a checkered backdrop
    std::uint64_t seed = 0;
};

/// Synthetic scene rendered from a known cloud: a colored ball in front of a checkered wall,
/// seen by cameras on a horizontal arc. `init` is the truth with jittered positions and
/// scales, half opacity and gray colors, standing in for a structure-from-motion cloud.
struct ToyScene {
    SceneDataset dataset;
    GaussianSet truth;
    GaussianSet init;
};
ToyScene make_toy_scene(const ToySceneOptions& options = {});

/// Procedural style images (stripes, checkers, blobs, gradients), distinct per index.
std::vector<Grid> make_toy_styles(int count, int size, std::uint64_t seed);

/// Smooth random content images (sums of colored blobs over a gradient).
std::vector<Grid> make_toy_contents(int count, int size, std::uint64_t seed);

} // namespace splatstyle
