// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatstyle/weights_io.hpp"

#include "splatstyle/errors.hpp"
#include "splatstyle/file_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstring>
#include <functional>
#include <numeric>

namespace splatstyle {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "weight blobs are little-endian");

namespace {

constexpr const char* kManifestSuffix = ".manifest.json";

fs::path strip_manifest_suffix(const fs::path& p) {
    const std::string s = p.string();
    const std::string suffix = kManifestSuffix;
    if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
        return s.substr(0, s.size() - suffix.size());
    }
    return p;
}

fs::path with_suffix(const fs::path& prefix, const std::string& suffix) {
    fs::path p = prefix;
    p += suffix;
    return p;
}

std::size_t element_count(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) {
            throw FormatError("negative dimension in shape " + shape_string(shape));
        }
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

} // namespace

std::size_t Tensor::count() const { return element_count(shape); }

std::string shape_string(const std::vector<int>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        s += (i ? ", " : "") + std::to_string(shape[i]);
    }
    return s + "]";
}

void validate_weights(const NetWeights& weights, const WeightSchema& schema) {
    for (const auto& spec : schema) {
        auto it = weights.find(spec.name);
        if (it == weights.end()) {
            throw ValidationError("weights: missing entry '" + spec.name + "' with shape " +
                                  shape_string(spec.shape));
        }
        if (it->second.shape != spec.shape) {
            throw ValidationError("weights: entry '" + spec.name + "' has shape " + shape_string(it->second.shape) +
                                  ", expected " + shape_string(spec.shape));
        }
        if (it->second.data.size() != it->second.count()) {
            throw ValidationError("weights: entry '" + spec.name + "' holds " +
                                  std::to_string(it->second.data.size()) + " values for shape " +
                                  shape_string(it->second.shape));
        }
    }
    for (const auto& [name, tensor] : weights) {
        const bool known = std::any_of(schema.begin(), schema.end(), [&](const WeightSpec& s) { return s.name == name; });
        if (!known) {
            throw ValidationError("weights: unexpected entry '" + name + "'");
        }
    }
}

void save_weights(const NetWeights& weights, const fs::path& prefix_in) {
    const fs::path prefix = strip_manifest_suffix(prefix_in);
    const fs::path blob_path = with_suffix(prefix, ".bin");
    json entries = json::array();
    std::string blob;
    for (const auto& [name, tensor] : weights) {
        if (tensor.data.size() != tensor.count()) {
            throw ShapeError("weights: entry '" + name + "' holds " + std::to_string(tensor.data.size()) +
                             " values for shape " + shape_string(tensor.shape));
        }
        entries.push_back({{"name", name}, {"shape", tensor.shape}, {"offset", blob.size()}});
        blob.append(reinterpret_cast<const char*>(tensor.data.data()), tensor.data.size() * sizeof(float));
    }
    json manifest = {{"blob", blob_path.filename().string()},
                     {"dtype", "float32"},
                     {"byte_order", "little"},
                     {"total_bytes", blob.size()},
                     {"entries", entries}};
    write_file_atomic(blob_path, blob);
    write_file_atomic(with_suffix(prefix, kManifestSuffix), manifest.dump(2) + "\n");
}

NetWeights load_weights(const fs::path& prefix_in) {
    const fs::path prefix = strip_manifest_suffix(prefix_in);
    const fs::path manifest_path = with_suffix(prefix, kManifestSuffix);
    json manifest;
    try {
        manifest = json::parse(read_file(manifest_path));
    } catch (const json::exception& e) {
        throw FormatError(manifest_path.string() + ": " + e.what());
    }
    fs::path blob_path = with_suffix(prefix, ".bin");
    if (manifest.contains("blob") && manifest["blob"].is_string()) {
        blob_path = manifest_path.parent_path() / manifest["blob"].get<std::string>();
    }
    if (!manifest.contains("entries") || !manifest["entries"].is_array()) {
        throw FormatError(manifest_path.string() + ": missing 'entries' array");
    }
    if (manifest.contains("dtype") && manifest["dtype"] != "float32") {
        throw FormatError(manifest_path.string() + ": unsupported dtype " + manifest["dtype"].dump());
    }
    const std::string blob = read_file(blob_path);

    struct Range {
        std::size_t begin;
        std::size_t end;
        std::string name;
    };
    std::vector<Range> ranges;
    NetWeights out;
    for (const json& e : manifest["entries"]) {
        if (!e.is_object() || !e.contains("name") || !e["name"].is_string() || !e.contains("shape") ||
            !e["shape"].is_array() || !e.contains("offset") || !e["offset"].is_number_unsigned()) {
            throw FormatError(manifest_path.string() + ": malformed entry " + e.dump());
        }
        Tensor t;
        const std::string name = e["name"].get<std::string>();
        try {
            t.shape = e["shape"].get<std::vector<int>>();
        } catch (const json::exception&) {
            throw FormatError(manifest_path.string() + ": entry '" + name + "' has a non-integer shape");
        }
        const std::size_t offset = e["offset"].get<std::size_t>();
        const std::size_t bytes = element_count(t.shape) * sizeof(float);
        if (offset % sizeof(float) != 0 || offset + bytes > blob.size()) {
            throw FormatError(manifest_path.string() + ": entry '" + name + "' lies outside the blob");
        }
        if (out.count(name) != 0) {
            throw FormatError(manifest_path.string() + ": duplicate entry '" + name + "'");
        }
        t.data.resize(element_count(t.shape));
        std::memcpy(t.data.data(), blob.data() + offset, bytes);
        ranges.push_back({offset, offset + bytes, name});
        out.emplace(name, std::move(t));
    }
    std::sort(ranges.begin(), ranges.end(), [](const Range& a, const Range& b) { return a.begin < b.begin; });
    std::size_t total = 0;
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        if (i > 0 && ranges[i].begin < ranges[i - 1].end) {
            throw FormatError(manifest_path.string() + ": entries '" + ranges[i - 1].name + "' and '" +
                              ranges[i].name + "' overlap");
        }
        total += ranges[i].end - ranges[i].begin;
    }
    if (total != blob.size()) {
        throw FormatError(manifest_path.string() + ": entries cover " + std::to_string(total) + " of " +
                          std::to_string(blob.size()) + " blob bytes");
    }
    return out;
}

NetWeights load_weights(const fs::path& prefix, const WeightSchema& schema) {
    NetWeights w = load_weights(prefix);
    validate_weights(w, schema);
    return w;
}

} // namespace splatstyle
