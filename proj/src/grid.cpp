// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatstyle/grid.hpp"

#include "splatstyle/errors.hpp"

#include <algorithm>
#include <cmath>

namespace splatstyle {

std::string Shape3::str() const {
    return "(" + std::to_string(channels) + ", " + std::to_string(height) + ", " + std::to_string(width) + ")";
}

Grid::Grid(int channels, int height, int width, float fill)
    : Grid(Shape3{channels, height, width}, fill) {}

Grid::Grid(Shape3 shape, float fill) : shape_(shape) {
    if (shape.channels < 0 || shape.height < 0 || shape.width < 0) {
        throw ShapeError("negative grid dimension " + shape.str());
    }
    values_.assign(shape.count(), fill);
}

Grid::Grid(Shape3 shape, std::vector<float> values) : shape_(shape), values_(std::move(values)) {
    if (values_.size() != shape_.count()) {
        throw ShapeError("grid " + shape_.str() + " needs " + std::to_string(shape_.count()) + " values, got " +
                         std::to_string(values_.size()));
    }
}

Grid Grid::column(std::span<const float> values) {
    return Grid(Shape3{static_cast<int>(values.size()), 1, 1}, std::vector<float>(values.begin(), values.end()));
}

std::span<float> Grid::channel(int c) & {
    return std::span<float>(values_).subspan(static_cast<std::size_t>(c) * shape_.plane(), shape_.plane());
}

std::span<const float> Grid::channel(int c) const& {
    return std::span<const float>(values_).subspan(static_cast<std::size_t>(c) * shape_.plane(), shape_.plane());
}

float Grid::item() const {
    if (values_.size() != 1) {
        throw ShapeError("item() on non-scalar grid " + shape_.str());
    }
    return values_[0];
}

bool Grid::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](float v) { return std::isfinite(v); });
}

void Grid::fill(float v) { std::fill(values_.begin(), values_.end(), v); }

Grid Grid::crop(int y0, int x0, int h, int w) const {
    if (y0 < 0 || x0 < 0 || h < 0 || w < 0 || y0 + h > shape_.height || x0 + w > shape_.width) {
        throw ShapeError("crop window out of bounds for " + shape_.str());
    }
    Grid out(shape_.channels, h, w);
    for (int c = 0; c < shape_.channels; ++c) {
        for (int y = 0; y < h; ++y) {
            const float* src = data() + (static_cast<std::size_t>(c) * shape_.height + (y0 + y)) * shape_.width + x0;
            std::copy(src, src + w, &out(c, y, 0));
        }
    }
    return out;
}

void require_same_shape(const Grid& a, const Grid& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
    }
}

} // namespace splatstyle
