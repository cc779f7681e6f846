// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatstyle/gaussian.hpp"

#include <filesystem>

namespace splatstyle {

/// Reads a binary little-endian PLY Gaussian cloud.
///
/// Required vertex properties: x y z, rot_0..rot_3, scale_0..scale_2 (log domain), opacity
/// (logit), f_dc_0..f_dc_2 and f_rest_* (the count fixes the SH degree). Optional feat_0..feat_{D-1}
/// set the feature dimension; without them features are zero, D = kDefaultFeatureDim and
/// features_present is false. Other properties are skipped. Throws FormatError naming the
/// offending property, IoError when the file cannot be read.
GaussianSet load_gaussians(const std::filesystem::path& path);

/// Writes all properties as float32. Feature columns are omitted when features_present is false.
void save_gaussians(const GaussianSet& gaussians, const std::filesystem::path& path);

} // namespace splatstyle
