// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatstyle/image_io.hpp"

#include "splatstyle/errors.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

namespace splatstyle {

unsigned char quantize_unit(float v) {
    const float c = std::isnan(v) ? 0.0f : std::clamp(v, 0.0f, 1.0f);
    return static_cast<unsigned char>(std::lround(c * 255.0f));
}

Grid load_image(const std::filesystem::path& path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_file(&image, path.c_str()) == 0) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw IoError("cannot read PNG " + path.string() + ": " + msg);
    }
    if (image.format != PNG_FORMAT_RGB) {
        png_image_free(&image);
        throw IoError(path.string() + " is not an 8-bit RGB PNG");
    }
    const int w = static_cast<int>(image.width);
    const int h = static_cast<int>(image.height);
    std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
    if (png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr) == 0) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw IoError("cannot decode PNG " + path.string() + ": " + msg);
    }
    Grid out(3, h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const unsigned char* px = &buffer[(static_cast<std::size_t>(y) * w + x) * 3];
            for (int c = 0; c < 3; ++c) {
                out(c, y, x) = static_cast<float>(px[c]) / 255.0f;
            }
        }
    }
    return out;
}

void save_image(const Grid& image, const std::filesystem::path& path) {
    if (image.channels() != 3 || image.empty()) {
        throw ShapeError("save_image expects a non-empty 3 x H x W grid, got " + image.shape().str());
    }
    const int w = image.width();
    const int h = image.height();
    std::vector<unsigned char> buffer(static_cast<std::size_t>(w) * h * 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                buffer[(static_cast<std::size_t>(y) * w + x) * 3 + c] = quantize_unit(image(c, y, x));
            }
        }
    }
    png_image png;
    std::memset(&png, 0, sizeof png);
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(w);
    png.height = static_cast<png_uint_32>(h);
    png.format = PNG_FORMAT_RGB;
    if (png_image_write_to_file(&png, path.c_str(), 0, buffer.data(), 0, nullptr) == 0) {
        const std::string msg = png.message;
        png_image_free(&png);
        throw IoError("cannot write PNG " + path.string() + ": " + msg);
    }
}

} // namespace splatstyle
