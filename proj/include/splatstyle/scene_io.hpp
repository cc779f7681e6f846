// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatstyle/camera.hpp"
#include "splatstyle/grid.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace splatstyle {

/// Posed images sharing one resolution.
struct SceneDataset {
    std::vector<Camera> cameras;
    std::vector<Grid> images; ///< 3 x H x W in [0, 1]
    std::vector<std::string> files;

    [[nodiscard]] std::size_t size() const { return cameras.size(); }
    /// Throws ValidationError on count or resolution mismatches and invalid cameras.
    void validate() const;
};

/// Reads `<dir>/scene.json` and the PNG files it references.
///
/// Schema: {"frames": [{"file": "a.png", "transform": [16 numbers, row-major camera-to-world],
/// "fx": .., "fy": .., "cx": .., "cy": .., "w": .., "h": ..}, ...]}. Intrinsics missing from a
/// frame fall back to top-level keys of the same name.
SceneDataset load_scene(const std::filesystem::path& dir);

/// Writes scene.json plus one PNG per frame (named after `files`, or frame_NNN.png).
void save_scene(const SceneDataset& scene, const std::filesystem::path& dir);

/// Cameras only, from the same scene.json (no images are read).
std::vector<Camera> load_cameras(const std::filesystem::path& dir);

} // namespace splatstyle
