// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatstyle/grid.hpp"

#include <filesystem>

namespace splatstyle {

/// Reads an 8-bit RGB PNG as a 3 x H x W grid with values k / 255. Any other pixel format
/// (gray, alpha, palette, 16-bit) is rejected with IoError.
Grid load_image(const std::filesystem::path& path);

/// Writes a 3 x H x W grid as 8-bit RGB: clamp to [0, 1], then round(v * 255).
void save_image(const Grid& image, const std::filesystem::path& path);

/// The byte each value maps to on save.
unsigned char quantize_unit(float v);

} // namespace splatstyle
