// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
// Python bindings. Grids cross the boundary as float32 arrays of shape (C, H, W); Gaussian
// attributes as (N, k) arrays; network weights as dicts of named arrays.
#include "splatstyle/consistency.hpp"
#include "splatstyle/errors.hpp"
#include "splatstyle/image_io.hpp"
#include "splatstyle/losses.hpp"
#include "splatstyle/parallel.hpp"
#include "splatstyle/ply.hpp"
#include "splatstyle/rasterizer.hpp"
#include "splatstyle/scene_io.hpp"
#include "splatstyle/stylizer.hpp"
#include "splatstyle/toy_scene.hpp"
#include "splatstyle/training.hpp"
#include "splatstyle/weights_io.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

namespace py = pybind11;
using namespace splatstyle;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

py::array_t<float> to_numpy(const Grid& g) {
    py::array_t<float> out({g.channels(), g.height(), g.width()});
    std::memcpy(out.mutable_data(), g.data(), g.size() * sizeof(float));
    return out;
}

Grid to_grid(const FloatArray& a) {
    if (a.ndim() == 2) {
        Grid g(1, static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
        std::memcpy(g.data(), a.data(), g.size() * sizeof(float));
        return g;
    }
    if (a.ndim() != 3) {
        throw ShapeError("expected a (C, H, W) or (H, W) array, got " + std::to_string(a.ndim()) + " dimensions");
    }
    Grid g(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)));
    std::memcpy(g.data(), a.data(), g.size() * sizeof(float));
    return g;
}

py::array_t<float> rows(const std::vector<float>& v, std::size_t n, std::size_t k) {
    py::array_t<float> out({n, k});
    if (n * k > 0) {
        std::memcpy(out.mutable_data(), v.data(), n * k * sizeof(float));
    }
    return out;
}

void set_rows(std::vector<float>& dst, const FloatArray& a, std::size_t n, std::size_t k, const char* what) {
    if (static_cast<std::size_t>(a.size()) != n * k) {
        throw ShapeError(std::string(what) + ": expected " + std::to_string(n) + " x " + std::to_string(k) +
                         " values, got " + std::to_string(a.size()));
    }
    dst.assign(a.data(), a.data() + a.size());
}

py::dict weights_to_dict(const NetWeights& w) {
    py::dict out;
    for (const auto& [name, t] : w) {
        std::vector<py::ssize_t> shape(t.shape.begin(), t.shape.end());
        py::array_t<float> a(shape);
        std::memcpy(a.mutable_data(), t.data.data(), t.data.size() * sizeof(float));
        out[py::str(name)] = a;
    }
    return out;
}

NetWeights dict_to_weights(const py::dict& d) {
    NetWeights w;
    for (const auto& [key, value] : d) {
        const auto a = value.cast<FloatArray>();
        Tensor t;
        t.shape.assign(a.shape(), a.shape() + a.ndim());
        t.data.assign(a.data(), a.data() + a.size());
        w.emplace(key.cast<std::string>(), std::move(t));
    }
    return w;
}

py::dict render_to_dict(const RenderOutput& r) {
    py::dict out;
    out["color"] = to_numpy(r.color);
    out["feature"] = to_numpy(r.feature);
    out["alpha"] = to_numpy(r.alpha);
    out["depth"] = to_numpy(r.depth);
    return out;
}

std::vector<Grid> to_grids_list(const std::vector<FloatArray>& arrays) {
    std::vector<Grid> out;
    out.reserve(arrays.size());
    for (const auto& a : arrays) {
        out.push_back(to_grid(a));
    }
    return out;
}

py::list grids_to_list(const std::vector<Grid>& grids) {
    py::list out;
    for (const auto& g : grids) {
        out.append(to_numpy(g));
    }
    return out;
}

/// Stylizer networks from weight dicts, shapes checked against each other.
StylizerModel make_model(const py::dict& encoder, const py::dict& decoder, const py::dict& mlp) {
    const NetWeights e = dict_to_weights(encoder);
    const NetWeights m = dict_to_weights(mlp);
    const StylizerArch arch = infer_arch(e, &m);
    const NetWeights d = dict_to_weights(decoder);
    validate_weights(d, decoder_schema(arch));
    return {to_grids(e, encoder_schema(arch)), to_grids(d, decoder_schema(arch)), to_grids(m, mlp_schema(arch)),
            ScaleMode::Fullres};
}

SceneDataset make_dataset(const std::vector<Camera>& cameras, const std::vector<FloatArray>& images) {
    SceneDataset s;
    s.cameras = cameras;
    s.images = to_grids_list(images);
    s.files.resize(cameras.size());
    s.validate();
    return s;
}

py::dict history_to_dict(const LossHistory& h) {
    py::dict out;
    for (const auto& [k, v] : h) {
        out[py::str(k)] = v;
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Feature-Gaussian style transfer core";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    m.def("set_thread_count", &set_thread_count, py::arg("n"));

    py::class_<Camera>(m, "Camera")
        .def(py::init<>())
        .def_readwrite("camera_to_world", &Camera::camera_to_world)
        .def_readwrite("fx", &Camera::fx)
        .def_readwrite("fy", &Camera::fy)
        .def_readwrite("cx", &Camera::cx)
        .def_readwrite("cy", &Camera::cy)
        .def_readwrite("width", &Camera::width)
        .def_readwrite("height", &Camera::height)
        .def_static("look_at", &Camera::look_at, py::arg("eye"), py::arg("target"), py::arg("up"), py::arg("focal"),
                    py::arg("width"), py::arg("height"))
        .def(
            "project",
            [](const Camera& c, const Eigen::Vector3d& world) {
                double depth = 0.0;
                const Eigen::Vector2d uv = c.project(world, &depth);
                return py::make_tuple(uv, depth);
            },
            py::arg("world"), "Continuous pixel coordinates (centers at +0.5) and camera depth.")
        .def("unproject", &Camera::unproject, py::arg("u"), py::arg("v"), py::arg("depth"))
        .def("center", &Camera::center);

    py::class_<GaussianSet>(m, "GaussianSet")
        .def(py::init<int, int>(), py::arg("sh_degree") = kMaxShDegree, py::arg("feature_dim") = kDefaultFeatureDim)
        .def("__len__", &GaussianSet::size)
        .def("resize", &GaussianSet::resize, py::arg("n"))
        .def_readonly("sh_degree", &GaussianSet::sh_degree)
        .def_readonly("feature_dim", &GaussianSet::feature_dim)
        .def_readwrite("features_present", &GaussianSet::features_present)
        .def_property(
            "positions", [](const GaussianSet& g) { return rows(g.positions, g.size(), 3); },
            [](GaussianSet& g, const FloatArray& a) { set_rows(g.positions, a, g.size(), 3, "positions"); })
        .def_property(
            "rotations", [](const GaussianSet& g) { return rows(g.rotations, g.size(), 4); },
            [](GaussianSet& g, const FloatArray& a) { set_rows(g.rotations, a, g.size(), 4, "rotations"); })
        .def_property(
            "log_scales", [](const GaussianSet& g) { return rows(g.log_scales, g.size(), 3); },
            [](GaussianSet& g, const FloatArray& a) { set_rows(g.log_scales, a, g.size(), 3, "log_scales"); })
        .def_property(
            "opacity_logits", [](const GaussianSet& g) { return rows(g.opacity_logits, g.size(), 1); },
            [](GaussianSet& g, const FloatArray& a) { set_rows(g.opacity_logits, a, g.size(), 1, "opacity_logits"); })
        .def_property(
            "sh",
            [](const GaussianSet& g) {
                return rows(g.sh, g.size(), static_cast<std::size_t>(g.sh_coeffs()) * 3);
            },
            [](GaussianSet& g, const FloatArray& a) {
                set_rows(g.sh, a, g.size(), static_cast<std::size_t>(g.sh_coeffs()) * 3, "sh");
            })
        .def_property(
            "features",
            [](const GaussianSet& g) { return rows(g.features, g.size(), static_cast<std::size_t>(g.feature_dim)); },
            [](GaussianSet& g, const FloatArray& a) {
                set_rows(g.features, a, g.size(), static_cast<std::size_t>(g.feature_dim), "features");
            });

    m.def("load_gaussians", &load_gaussians, py::arg("path"));
    m.def("save_gaussians", &save_gaussians, py::arg("gaussians"), py::arg("path"));
    m.def(
        "load_image", [](const std::filesystem::path& p) { return to_numpy(load_image(p)); }, py::arg("path"));
    m.def(
        "save_image", [](const FloatArray& a, const std::filesystem::path& p) { save_image(to_grid(a), p); },
        py::arg("image"), py::arg("path"));
    m.def(
        "load_scene",
        [](const std::filesystem::path& dir) {
            const SceneDataset s = load_scene(dir);
            return py::make_tuple(s.cameras, grids_to_list(s.images));
        },
        py::arg("dir"), "Cameras and (3, H, W) images of a scene directory.");
    m.def(
        "save_scene",
        [](const std::vector<Camera>& cameras, const std::vector<FloatArray>& images,
           const std::filesystem::path& dir) { save_scene(make_dataset(cameras, images), dir); },
        py::arg("cameras"), py::arg("images"), py::arg("dir"));
    m.def(
        "load_weights", [](const std::filesystem::path& p) { return weights_to_dict(load_weights(p)); },
        py::arg("prefix"));
    m.def(
        "save_weights",
        [](const py::dict& w, const std::filesystem::path& p) { save_weights(dict_to_weights(w), p); },
        py::arg("weights"), py::arg("prefix"));

    m.def(
        "rasterize", [](const GaussianSet& g, const Camera& c) { return render_to_dict(rasterize(g, c)); },
        py::arg("gaussians"), py::arg("camera"), "Dict of color, feature, alpha and depth maps.");

    m.def(
        "random_weights",
        [](const std::string& net, const std::array<int, 4>& widths, int feature_dim, std::uint64_t seed) {
            StylizerArch arch;
            arch.widths = widths;
            arch.feature_dim = feature_dim;
            if (net == "encoder") {
                return weights_to_dict(random_weights(encoder_schema(arch), seed));
            }
            if (net == "decoder") {
                return weights_to_dict(init_decoder_weights(arch, seed));
            }
            if (net == "mlp") {
                return weights_to_dict(random_weights(mlp_schema(arch), seed));
            }
            throw ConfigError("net must be encoder, decoder or mlp, got '" + net + "'");
        },
        py::arg("net"), py::arg("widths") = std::array<int, 4>{16, 32, 64, 128},
        py::arg("feature_dim") = kDefaultFeatureDim, py::arg("seed") = 0);

    m.def(
        "encode",
        [](const FloatArray& image, const py::dict& encoder, const std::string& mode) {
            const NetWeights w = dict_to_weights(encoder);
            return to_numpy(encode(to_grid(image), to_grids(w, encoder_schema(infer_arch(w))), parse_scale_mode(mode)));
        },
        py::arg("image"), py::arg("encoder"), py::arg("mode") = "fullres");
    m.def(
        "channel_stats",
        [](const FloatArray& a) {
            const ChannelStats s = channel_stats(to_grid(a));
            return py::make_tuple(s.mean, s.std);
        },
        py::arg("grid"), "Per-channel mean and standard deviation.");
    m.def(
        "adain",
        [](const FloatArray& normalized, const std::vector<float>& mean, const std::vector<float>& std) {
            return to_numpy(adain(to_grid(normalized), StyleCode{mean, std}));
        },
        py::arg("normalized"), py::arg("mean"), py::arg("std"));
    m.def(
        "ssim", [](const FloatArray& a, const FloatArray& b) { return ssim(to_grid(a), to_grid(b)); }, py::arg("a"),
        py::arg("b"));

    py::class_<StylizerModel>(m, "Stylizer")
        .def(py::init(&make_model), py::arg("encoder"), py::arg("decoder"), py::arg("mlp"))
        .def(
            "style_code",
            [](const StylizerModel& s, const FloatArray& style) {
                const StyleCode c = compute_style_code(to_grid(style), s.encoder, s.mode);
                return py::make_tuple(c.mean, c.std);
            },
            py::arg("style"), "(mean, std) of the encoded style image.")
        .def(
            "stylize_view",
            [](const StylizerModel& s, const GaussianSet& g, const Camera& cam, const FloatArray& style,
               bool renormalize) {
                const StyleCode code = compute_style_code(to_grid(style), s.encoder, s.mode);
                const StylizedView v = stylize_view(g, cam, code, s, renormalize);
                py::dict out = render_to_dict(v.render);
                out["expanded"] = to_numpy(v.expanded);
                out["styled"] = to_numpy(v.styled);
                out["image"] = to_numpy(v.image);
                return out;
            },
            py::arg("gaussians"), py::arg("camera"), py::arg("style"), py::arg("renormalize") = false)
        .def(
            "ablation_report",
            [](const StylizerModel& s, const GaussianSet& g, const std::vector<Camera>& cameras,
               const std::vector<std::pair<int, int>>& views, const FloatArray& style, double scene_scale) {
                const StyleCode code = compute_style_code(to_grid(style), s.encoder, s.mode);
                MatchOptions opts;
                opts.scene_scale = scene_scale;
                return ablation_compare(g, cameras, views, code, s, opts, "").to_json().dump();
            },
            py::arg("gaussians"), py::arg("cameras"), py::arg("views"), py::arg("style"),
            py::arg("scene_scale") = 1.0, "Integrated vs view-specific consistency report as a JSON string.");

    m.def(
        "make_toy_scene",
        [](int views, int size, int gaussians, std::uint64_t seed) {
            const ToyScene t = make_toy_scene({views, size, gaussians, seed});
            py::dict out;
            out["cameras"] = t.dataset.cameras;
            out["images"] = grids_to_list(t.dataset.images);
            out["truth"] = t.truth;
            out["init"] = t.init;
            return out;
        },
        py::arg("views") = 5, py::arg("size") = 64, py::arg("gaussians") = 400, py::arg("seed") = 0);
    m.def(
        "make_toy_styles",
        [](int count, int size, std::uint64_t seed) { return grids_to_list(make_toy_styles(count, size, seed)); },
        py::arg("count"), py::arg("size") = 64, py::arg("seed") = 0);

    m.def(
        "pretrain_geometry",
        [](const std::vector<Camera>& cameras, const std::vector<FloatArray>& images, GaussianSet init, int iterations,
           std::uint64_t seed) {
            TrainConfig cfg;
            cfg.iterations = iterations;
            cfg.seed = seed;
            const SceneDataset scene = make_dataset(cameras, images);
            GeometryResult r;
            {
                py::gil_scoped_release release;
                r = pretrain_geometry(cfg, scene, std::move(init));
            }
            return py::make_tuple(r.gaussians, r.mean_psnr, history_to_dict(r.history));
        },
        py::arg("cameras"), py::arg("images"), py::arg("init"), py::arg("iterations") = 2000, py::arg("seed") = 0,
        "Photometric fit; returns (gaussians, mean_psnr, history).");
    m.def(
        "train_style",
        [](const std::vector<Camera>& cameras, const std::vector<FloatArray>& images, const GaussianSet& geometry,
           const StylizerModel& model, const std::vector<FloatArray>& styles, int iterations, std::uint64_t seed,
           int crop_size) {
            TrainConfig cfg;
            cfg.iterations = iterations;
            cfg.seed = seed;
            cfg.crop_size = crop_size;
            const SceneDataset scene = make_dataset(cameras, images);
            const std::vector<Grid> style_grids = to_grids_list(styles);
            StyleResult r;
            {
                py::gil_scoped_release release;
                r = train_style(cfg, scene, geometry, model, style_grids);
            }
            StylizerArch arch;
            arch.widths[3] = r.mlp.at("mlp.weight").channels();
            arch.feature_dim = r.mlp.at("mlp.weight").height();
            return py::make_tuple(r.gaussians, weights_to_dict(to_weights(r.mlp, mlp_schema(arch))),
                                  history_to_dict(r.history));
        },
        py::arg("cameras"), py::arg("images"), py::arg("geometry"), py::arg("model"), py::arg("styles"),
        py::arg("iterations") = 3000, py::arg("seed") = 0, py::arg("crop_size") = 32,
        "Feature and MLP training; returns (gaussians, mlp weights, history).");
}
