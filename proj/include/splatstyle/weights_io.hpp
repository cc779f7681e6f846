// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace splatstyle {

/// A named float tensor with an arbitrary shape.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    [[nodiscard]] std::size_t count() const;
    friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Network parameters keyed by name; iteration order (sorted by name) fixes the blob layout.
using NetWeights = std::map<std::string, Tensor>;

struct WeightSpec {
    std::string name;
    std::vector<int> shape;
};
/// The entries an architecture requires.
using WeightSchema = std::vector<WeightSpec>;

std::string shape_string(const std::vector<int>& shape);

/// Throws ValidationError naming the first missing, unexpected or mis-shaped entry.
void validate_weights(const NetWeights& weights, const WeightSchema& schema);

/// Writes `<prefix>.manifest.json` and `<prefix>.bin` (raw little-endian float32). The manifest
/// lists {name, shape, offset} per entry with offsets in bytes.
void save_weights(const NetWeights& weights, const std::filesystem::path& prefix);

/// Reads the pair written by save_weights. `prefix` may also name the manifest file itself.
/// Throws IoError for unreadable files and FormatError for overlapping or out-of-range entries.
NetWeights load_weights(const std::filesystem::path& prefix);
/// As above, then validate_weights against `schema`.
NetWeights load_weights(const std::filesystem::path& prefix, const WeightSchema& schema);

} // namespace splatstyle
