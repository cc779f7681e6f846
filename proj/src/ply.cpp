// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatstyle/ply.hpp"

#include "splatstyle/errors.hpp"
#include "splatstyle/file_util.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <sstream>

namespace splatstyle {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "PLY I/O assumes a little-endian host");

namespace {

enum class ScalarType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<ScalarType> parse_type(const std::string& t) {
    static const std::map<std::string, ScalarType> kTypes = {
        {"char", ScalarType::Int8},     {"int8", ScalarType::Int8},       {"uchar", ScalarType::UInt8},
        {"uint8", ScalarType::UInt8},   {"short", ScalarType::Int16},     {"int16", ScalarType::Int16},
        {"ushort", ScalarType::UInt16}, {"uint16", ScalarType::UInt16},   {"int", ScalarType::Int32},
        {"int32", ScalarType::Int32},   {"uint", ScalarType::UInt32},     {"uint32", ScalarType::UInt32},
        {"float", ScalarType::Float32}, {"float32", ScalarType::Float32}, {"double", ScalarType::Float64},
        {"float64", ScalarType::Float64}};
    auto it = kTypes.find(t);
    if (it == kTypes.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t type_size(ScalarType t) {
    switch (t) {
    case ScalarType::Int8:
    case ScalarType::UInt8:
        return 1;
    case ScalarType::Int16:
    case ScalarType::UInt16:
        return 2;
    case ScalarType::Int32:
    case ScalarType::UInt32:
    case ScalarType::Float32:
        return 4;
    case ScalarType::Float64:
        return 8;
    }
    return 0;
}

template <typename T>
T read_raw(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof v);
    return v;
}

float read_as_float(const char* p, ScalarType t) {
    switch (t) {
    case ScalarType::Int8:
        return static_cast<float>(read_raw<std::int8_t>(p));
    case ScalarType::UInt8:
        return static_cast<float>(read_raw<std::uint8_t>(p));
    case ScalarType::Int16:
        return static_cast<float>(read_raw<std::int16_t>(p));
    case ScalarType::UInt16:
        return static_cast<float>(read_raw<std::uint16_t>(p));
    case ScalarType::Int32:
        return static_cast<float>(read_raw<std::int32_t>(p));
    case ScalarType::UInt32:
        return static_cast<float>(read_raw<std::uint32_t>(p));
    case ScalarType::Float32:
        return read_raw<float>(p);
    case ScalarType::Float64:
        return static_cast<float>(read_raw<double>(p));
    }
    return 0.0f;
}

struct Property {
    std::string name;
    ScalarType type = ScalarType::Float32;
    std::size_t offset = 0;
};

struct Header {
    std::size_t vertex_count = 0;
    std::vector<Property> properties;
    std::size_t stride = 0;
    std::size_t data_offset = 0;
};

Header parse_header(const std::string& bytes, const fs::path& path) {
    const std::string kEnd = "end_header\n";
    const auto end = bytes.find(kEnd);
    if (bytes.rfind("ply\n", 0) != 0 || end == std::string::npos) {
        throw FormatError(path.string() + ": not a PLY file");
    }
    Header h;
    h.data_offset = end + kEnd.size();
    std::istringstream lines(bytes.substr(4, end - 4));
    std::string line;
    bool in_vertex = false;
    bool seen_vertex = false;
    bool format_ok = false;
    while (std::getline(lines, line)) {
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word.empty() || word == "comment" || word == "obj_info") {
            continue;
        }
        if (word == "format") {
            std::string fmt;
            std::string version;
            ls >> fmt >> version;
            if (fmt != "binary_little_endian") {
                throw FormatError(path.string() + ": unsupported PLY format '" + fmt + "'");
            }
            format_ok = true;
        } else if (word == "element") {
            std::string name;
            long long count = -1;
            ls >> name >> count;
            if (!ls || count < 0) {
                throw FormatError(path.string() + ": malformed element line '" + line + "'");
            }
            if (name == "vertex") {
                if (seen_vertex) {
                    throw FormatError(path.string() + ": duplicate vertex element");
                }
                seen_vertex = true;
                in_vertex = true;
                h.vertex_count = static_cast<std::size_t>(count);
            } else {
                if (!seen_vertex) {
                    throw FormatError(path.string() + ": element '" + name + "' precedes vertex");
                }
                in_vertex = false;
            }
        } else if (word == "property") {
            std::string type;
            std::string name;
            ls >> type;
            if (type == "list") {
                if (in_vertex) {
                    throw FormatError(path.string() + ": list property in vertex element");
                }
                continue;
            }
            ls >> name;
            if (!ls || name.empty()) {
                throw FormatError(path.string() + ": malformed property line '" + line + "'");
            }
            auto t = parse_type(type);
            if (!t) {
                throw FormatError(path.string() + ": property '" + name + "' has unknown type '" + type + "'");
            }
            if (in_vertex) {
                h.properties.push_back({name, *t, h.stride});
                h.stride += type_size(*t);
            }
        } else {
            throw FormatError(path.string() + ": unexpected header line '" + line + "'");
        }
    }
    if (!format_ok) {
        throw FormatError(path.string() + ": missing format line");
    }
    if (!seen_vertex) {
        throw FormatError(path.string() + ": missing vertex element");
    }
    return h;
}

} // namespace

GaussianSet load_gaussians(const fs::path& path) {
    const std::string bytes = read_file(path);
    const Header h = parse_header(bytes, path);
    std::map<std::string, const Property*> by_name;
    for (const auto& p : h.properties) {
        by_name[p.name] = &p;
    }
    auto require = [&](const std::string& name) -> const Property& {
        auto it = by_name.find(name);
        if (it == by_name.end()) {
            throw FormatError(path.string() + ": missing vertex property '" + name + "'");
        }
        return *it->second;
    };

    int rest = 0;
    while (by_name.count("f_rest_" + std::to_string(rest)) != 0) {
        ++rest;
    }
    int degree = -1;
    for (int d = 0; d <= kMaxShDegree; ++d) {
        if (3 * (sh_coeff_count(d) - 1) == rest) {
            degree = d;
        }
    }
    if (degree < 0) {
        throw FormatError(path.string() + ": " + std::to_string(rest) +
                          " f_rest_* properties do not match any SH degree up to 3");
    }
    int dim = 0;
    while (by_name.count("feat_" + std::to_string(dim)) != 0) {
        ++dim;
    }
    const bool present = dim > 0;

    GaussianSet gs(degree, present ? dim : kDefaultFeatureDim);
    gs.features_present = present;
    const std::size_t n = h.vertex_count;
    if (bytes.size() < h.data_offset + n * h.stride) {
        throw FormatError(path.string() + ": truncated vertex data");
    }
    gs.resize(n);

    std::vector<const Property*> pos = {&require("x"), &require("y"), &require("z")};
    std::vector<const Property*> rot;
    std::vector<const Property*> scale;
    std::vector<const Property*> dc;
    std::vector<const Property*> rest_props;
    std::vector<const Property*> feat;
    for (int i = 0; i < 4; ++i) {
        rot.push_back(&require("rot_" + std::to_string(i)));
    }
    for (int i = 0; i < 3; ++i) {
        scale.push_back(&require("scale_" + std::to_string(i)));
        dc.push_back(&require("f_dc_" + std::to_string(i)));
    }
    for (int i = 0; i < rest; ++i) {
        rest_props.push_back(&require("f_rest_" + std::to_string(i)));
    }
    for (int i = 0; i < dim; ++i) {
        feat.push_back(&require("feat_" + std::to_string(i)));
    }
    const Property& opacity = require("opacity");

    const int k = sh_coeff_count(degree);
    const char* base = bytes.data() + h.data_offset;
    for (std::size_t v = 0; v < n; ++v) {
        const char* row = base + v * h.stride;
        auto get = [&](const Property* p) { return read_as_float(row + p->offset, p->type); };
        for (int i = 0; i < 3; ++i) {
            gs.positions[v * 3 + i] = get(pos[i]);
            gs.log_scales[v * 3 + i] = get(scale[i]);
            gs.sh[v * k * 3 + i] = get(dc[i]);
        }
        for (int i = 0; i < 4; ++i) {
            gs.rotations[v * 4 + i] = get(rot[i]);
        }
        gs.opacity_logits[v] = get(&opacity);
        // f_rest is channel-major: index c * (k - 1) + (j - 1) holds coefficient j of channel c.
        for (int c = 0; c < 3; ++c) {
            for (int j = 1; j < k; ++j) {
                gs.sh[v * k * 3 + j * 3 + c] = get(rest_props[static_cast<std::size_t>(c * (k - 1) + j - 1)]);
            }
        }
        for (int i = 0; i < dim; ++i) {
            gs.features[v * dim + i] = get(feat[i]);
        }
    }
    return gs;
}

void save_gaussians(const GaussianSet& gs, const fs::path& path) {
    gs.check_consistent();
    const int k = gs.sh_coeffs();
    const int dim = gs.features_present ? gs.feature_dim : 0;
    std::vector<std::string> names = {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2"};
    for (int i = 0; i < 3 * (k - 1); ++i) {
        names.push_back("f_rest_" + std::to_string(i));
    }
    names.push_back("opacity");
    for (int i = 0; i < 3; ++i) {
        names.push_back("scale_" + std::to_string(i));
    }
    for (int i = 0; i < 4; ++i) {
        names.push_back("rot_" + std::to_string(i));
    }
    for (int i = 0; i < dim; ++i) {
        names.push_back("feat_" + std::to_string(i));
    }
    std::ostringstream out;
    out << "ply\nformat binary_little_endian 1.0\nelement vertex " << gs.size() << "\n";
    for (const auto& n : names) {
        out << "property float " << n << "\n";
    }
    out << "end_header\n";
    std::string data = out.str();
    std::vector<float> row;
    row.reserve(names.size());
    for (std::size_t v = 0; v < gs.size(); ++v) {
        row.clear();
        for (int i = 0; i < 3; ++i) {
            row.push_back(gs.positions[v * 3 + i]);
        }
        for (int c = 0; c < 3; ++c) {
            row.push_back(gs.sh[v * k * 3 + c]);
        }
        for (int c = 0; c < 3; ++c) {
            for (int j = 1; j < k; ++j) {
                row.push_back(gs.sh[v * k * 3 + j * 3 + c]);
            }
        }
        row.push_back(gs.opacity_logits[v]);
        for (int i = 0; i < 3; ++i) {
            row.push_back(gs.log_scales[v * 3 + i]);
        }
        for (int i = 0; i < 4; ++i) {
            row.push_back(gs.rotations[v * 4 + i]);
        }
        for (int i = 0; i < dim; ++i) {
            row.push_back(gs.features[v * dim + i]);
        }
        data.append(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(float));
    }
    write_file_atomic(path, data);
}

} // namespace splatstyle
