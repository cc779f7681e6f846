// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatstyle/scene_io.hpp"

#include "splatstyle/errors.hpp"
#include "splatstyle/file_util.hpp"
#include "splatstyle/image_io.hpp"

#include <json.hpp>

#include <cstdio>

namespace splatstyle {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double number_field(const json& frame, const json& root, const char* key, std::size_t index) {
    const json* src = frame.contains(key) ? &frame : (root.contains(key) ? &root : nullptr);
    if (src == nullptr || !(*src)[key].is_number()) {
        throw FormatError("scene.json frame " + std::to_string(index) + ": missing numeric field '" + key + "'");
    }
    return (*src)[key].get<double>();
}

struct FrameEntry {
    std::string file;
    Camera camera;
};

std::vector<FrameEntry> parse_frames(const fs::path& dir) {
    json root;
    try {
        root = json::parse(read_file(dir / "scene.json"));
    } catch (const json::exception& e) {
        throw FormatError("scene.json: " + std::string(e.what()));
    }
    if (!root.is_object() || !root.contains("frames") || !root["frames"].is_array()) {
        throw FormatError("scene.json: expected an object with a 'frames' array");
    }
    std::vector<FrameEntry> out;
    std::size_t index = 0;
    for (const json& frame : root["frames"]) {
        if (!frame.is_object() || !frame.contains("file") || !frame["file"].is_string()) {
            throw FormatError("scene.json frame " + std::to_string(index) + ": missing 'file'");
        }
        if (!frame.contains("transform") || !frame["transform"].is_array() || frame["transform"].size() != 16) {
            throw FormatError("scene.json frame " + std::to_string(index) + ": 'transform' must hold 16 numbers");
        }
        FrameEntry e;
        e.file = frame["file"].get<std::string>();
        for (int i = 0; i < 16; ++i) {
            const json& v = frame["transform"][static_cast<std::size_t>(i)];
            if (!v.is_number()) {
                throw FormatError("scene.json frame " + std::to_string(index) + ": non-numeric transform entry");
            }
            e.camera.camera_to_world(i / 4, i % 4) = v.get<double>();
        }
        e.camera.fx = number_field(frame, root, "fx", index);
        e.camera.fy = number_field(frame, root, "fy", index);
        e.camera.cx = number_field(frame, root, "cx", index);
        e.camera.cy = number_field(frame, root, "cy", index);
        e.camera.width = static_cast<int>(number_field(frame, root, "w", index));
        e.camera.height = static_cast<int>(number_field(frame, root, "h", index));
        try {
            e.camera.validate();
        } catch (const ValidationError& err) {
            throw ValidationError("scene.json frame " + std::to_string(index) + ": " + err.what());
        }
        out.push_back(std::move(e));
        ++index;
    }
    return out;
}

} // namespace

void SceneDataset::validate() const {
    if (cameras.size() != images.size()) {
        throw ValidationError("scene has " + std::to_string(cameras.size()) + " cameras but " +
                              std::to_string(images.size()) + " images");
    }
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        cameras[i].validate();
        if (images[i].channels() != 3 || images[i].width() != cameras[i].width ||
            images[i].height() != cameras[i].height) {
            throw ValidationError("frame " + std::to_string(i) + ": image " + images[i].shape().str() +
                                  " does not match camera " + std::to_string(cameras[i].width) + "x" +
                                  std::to_string(cameras[i].height));
        }
        if (cameras[i].width != cameras[0].width || cameras[i].height != cameras[0].height) {
            throw ValidationError("frame " + std::to_string(i) + ": resolution differs from frame 0");
        }
    }
}

std::vector<Camera> load_cameras(const fs::path& dir) {
    std::vector<Camera> out;
    for (auto& f : parse_frames(dir)) {
        out.push_back(f.camera);
    }
    return out;
}

SceneDataset load_scene(const fs::path& dir) {
    SceneDataset scene;
    for (auto& f : parse_frames(dir)) {
        scene.images.push_back(load_image(dir / f.file));
        scene.cameras.push_back(f.camera);
        scene.files.push_back(f.file);
    }
    scene.validate();
    return scene;
}

void save_scene(const SceneDataset& scene, const fs::path& dir) {
    scene.validate();
    fs::create_directories(dir);
    json frames = json::array();
    for (std::size_t i = 0; i < scene.size(); ++i) {
        std::string file;
        if (i < scene.files.size() && !scene.files[i].empty()) {
            file = scene.files[i];
        } else {
            char name[32];
            std::snprintf(name, sizeof name, "frame_%03zu.png", i);
            file = name;
        }
        const Camera& cam = scene.cameras[i];
        json transform = json::array();
        for (int k = 0; k < 16; ++k) {
            transform.push_back(cam.camera_to_world(k / 4, k % 4));
        }
        frames.push_back({{"file", file},
                          {"transform", transform},
                          {"fx", cam.fx},
                          {"fy", cam.fy},
                          {"cx", cam.cx},
                          {"cy", cam.cy},
                          {"w", cam.width},
                          {"h", cam.height}});
        save_image(scene.images[i], dir / file);
    }
    write_file_atomic(dir / "scene.json", json{{"frames", frames}}.dump(2) + "\n");
}

} // namespace splatstyle
