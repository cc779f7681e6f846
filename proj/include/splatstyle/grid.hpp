// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace splatstyle {

struct Shape3 {
    int channels = 0;
    int height = 0;
    int width = 0;

    [[nodiscard]] std::size_t count() const {
        return static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
               static_cast<std::size_t>(width);
    }
    [[nodiscard]] std::size_t plane() const {
        return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    }
    [[nodiscard]] std::string str() const;

    friend bool operator==(const Shape3&, const Shape3&) = default;
};

/// Dense channels x height x width single-precision array, row-major within a channel.
/// Used for images, feature maps, per-channel statistics (C x 1 x 1) and parameter blocks.
class Grid {
public:
    Grid() = default;
    Grid(int channels, int height, int width, float fill = 0.0f);
    explicit Grid(Shape3 shape, float fill = 0.0f);
    Grid(Shape3 shape, std::vector<float> values);

    static Grid scalar(float v) { return Grid(1, 1, 1, v); }
    /// C x 1 x 1 grid holding a per-channel vector.
    static Grid column(std::span<const float> values);

    [[nodiscard]] const Shape3& shape() const { return shape_; }
    [[nodiscard]] int channels() const { return shape_.channels; }
    [[nodiscard]] int height() const { return shape_.height; }
    [[nodiscard]] int width() const { return shape_.width; }
    [[nodiscard]] std::size_t size() const { return values_.size(); }
    [[nodiscard]] bool empty() const { return values_.empty(); }

    [[nodiscard]] std::span<float> values() & { return values_; }
    [[nodiscard]] std::span<const float> values() const& { return values_; }
    std::span<const float> values() && = delete;
    [[nodiscard]] float* data() { return values_.data(); }
    [[nodiscard]] const float* data() const { return values_.data(); }

    [[nodiscard]] std::span<float> channel(int c) &;
    [[nodiscard]] std::span<const float> channel(int c) const&;
    std::span<const float> channel(int c) && = delete;

    float& operator()(int c, int y, int x) {
        return values_[(static_cast<std::size_t>(c) * shape_.height + y) * shape_.width + x];
    }
    float operator()(int c, int y, int x) const {
        return values_[(static_cast<std::size_t>(c) * shape_.height + y) * shape_.width + x];
    }
    [[nodiscard]] float* ptr(int c, int y, int x) { return &(*this)(c, y, x); }
    [[nodiscard]] const float* ptr(int c, int y, int x) const {
        return values_.data() + (static_cast<std::size_t>(c) * shape_.height + y) * shape_.width + x;
    }
    float& operator[](std::size_t i) { return values_[i]; }
    float operator[](std::size_t i) const { return values_[i]; }

    [[nodiscard]] float item() const;
    [[nodiscard]] bool all_finite() const;
    void fill(float v);

    /// Copy of the window [y0, y0+h) x [x0, x0+w) over all channels.
    [[nodiscard]] Grid crop(int y0, int x0, int h, int w) const;

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    Shape3 shape_;
    std::vector<float> values_;
};

void require_same_shape(const Grid& a, const Grid& b, const char* what);

} // namespace splatstyle
