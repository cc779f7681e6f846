// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
// splatstyle: command-line front end for the training, stylization and evaluation pipeline.
#include "splatstyle/consistency.hpp"
#include "splatstyle/errors.hpp"
#include "splatstyle/file_util.hpp"
#include "splatstyle/image_io.hpp"
#include "splatstyle/parallel.hpp"
#include "splatstyle/ply.hpp"
#include "splatstyle/rasterizer.hpp"
#include "splatstyle/scene_io.hpp"
#include "splatstyle/stylizer.hpp"
#include "splatstyle/toy_scene.hpp"
#include "splatstyle/training.hpp"
#include "splatstyle/weights_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace splatstyle;

namespace {

/// One subcommand: its CLI11 handle, the getters that echo its effective config, and its body.
struct Command {
    CLI::App* app = nullptr;
    std::string config_file;
    std::vector<std::pair<std::string, std::function<json()>>> echo;
    std::vector<CLI::Option*> required;
    std::function<void()> run;

    template <typename T>
    CLI::Option* add(const std::string& flag, T& var, const std::string& help, bool is_required = false) {
        CLI::Option* o = app->add_option(flag, var, help);
        if (is_required) {
            o->description(help + " (required)");
            required.push_back(o);
        }
        echo.emplace_back(o->get_lnames().front(), [&var] { return to_json_value(var); });
        return o;
    }
    CLI::Option* flag(const std::string& name, bool& var, const std::string& help) {
        CLI::Option* o = app->add_flag(name, var, help);
        echo.emplace_back(o->get_lnames().front(), [&var] { return json(var); });
        return o;
    }

    template <typename T>
    static json to_json_value(const T& v) {
        if constexpr (std::is_same_v<T, fs::path>) {
            return v.string();
        } else {
            return json(v);
        }
    }

    /// Fills options not given on the command line from the --config JSON object, whose keys
    /// are long option names without dashes. Unknown keys are errors.
    void apply_config() {
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) {
                throw ConfigError("--config: cannot open " + config_file);
            }
            json j;
            try {
                j = json::parse(in);
            } catch (const json::exception& e) {
                throw ConfigError("--config: " + config_file + " is not valid JSON: " + e.what());
            }
            if (!j.is_object()) {
                throw ConfigError("--config: " + config_file + " must hold a JSON object");
            }
            for (const auto& [key, value] : j.items()) {
                CLI::Option* o = key == "config" ? nullptr : app->get_option_no_throw("--" + key);
                if (o == nullptr) {
                    throw ConfigError("--config: unknown key '" + key + "' for " + app->get_name());
                }
                if (o->count() > 0) {
                    continue;
                }
                if (!value.is_string() && !value.is_number() && !value.is_boolean()) {
                    throw ConfigError("--config: key '" + key + "' must be a string, number or boolean");
                }
                o->add_result(value.is_string() ? value.get<std::string>() : value.dump());
                try {
                    o->run_callback();
                } catch (const CLI::ParseError& e) {
                    throw ConfigError("--config: key '" + key + "': " + e.what());
                }
            }
        }
        for (const CLI::Option* o : required) {
            if (o->count() == 0) {
                throw ConfigError(o->get_name() + " is required");
            }
        }
    }

    [[nodiscard]] json effective_config() const {
        json options = json::object();
        for (const auto& [name, get] : echo) {
            options[name] = get();
        }
        return {{"command", app->get_name()}, {"options", options}};
    }
};

void write_run_config(const Command& cmd, const fs::path& dir) {
    fs::create_directories(dir);
    write_file_atomic(dir / "run_config.json", cmd.effective_config().dump(2) + "\n");
}

void require_path(const fs::path& p, const std::string& flag) {
    if (!fs::exists(p)) {
        throw ConfigError(flag + ": path not found: " + p.string());
    }
}

int parse_index(const std::string& text, const std::string& flag) {
    std::size_t used = 0;
    int v = -1;
    try {
        v = std::stoi(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size() || v < 0) {
        throw ConfigError(flag + ": '" + text + "' is not a view index");
    }
    return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        out.push_back(item);
    }
    if (!text.empty() && text.back() == sep) {
        out.emplace_back();
    }
    return out;
}

/// "all" or a comma-separated list of indices below `count`.
std::vector<int> parse_views(const std::string& spec, std::size_t count) {
    std::vector<int> out;
    if (spec == "all") {
        for (std::size_t i = 0; i < count; ++i) {
            out.push_back(static_cast<int>(i));
        }
        return out;
    }
    for (const auto& part : split(spec, ',')) {
        const int v = parse_index(part, "--views");
        if (static_cast<std::size_t>(v) >= count) {
            throw ConfigError("--views: index " + part + " out of range (" + std::to_string(count) + " views)");
        }
        out.push_back(v);
    }
    if (out.empty()) {
        throw ConfigError("--views: no views selected");
    }
    return out;
}

/// "a,b" or "a,b;c,d".
std::vector<std::pair<int, int>> parse_view_pairs(const std::string& spec, std::size_t count) {
    std::vector<std::pair<int, int>> out;
    for (const auto& pair : split(spec, ';')) {
        const auto parts = split(pair, ',');
        if (parts.size() != 2) {
            throw ConfigError("--views: expected 'a,b' pairs separated by ';', got '" + spec + "'");
        }
        const int a = parse_index(parts[0], "--views");
        const int b = parse_index(parts[1], "--views");
        if (static_cast<std::size_t>(std::max(a, b)) >= count) {
            throw ConfigError("--views: pair '" + pair + "' out of range (" + std::to_string(count) + " views)");
        }
        out.emplace_back(a, b);
    }
    return out;
}

std::string view_file(int v) {
    char name[32];
    std::snprintf(name, sizeof(name), "view_%03d.png", v);
    return name;
}

ParamGrids load_encoder(const fs::path& prefix, StylizerArch& arch) {
    const NetWeights w = load_weights(prefix);
    arch = infer_arch(w);
    return to_grids(w, encoder_schema(arch));
}

/// Encoder, decoder and MLP with shapes cross-checked against each other.
StylizerModel load_model(const fs::path& enc, const fs::path& dec, const fs::path& mlp) {
    const NetWeights e = load_weights(enc);
    const NetWeights m = load_weights(mlp);
    const StylizerArch arch = infer_arch(e, &m);
    StylizerModel model;
    model.encoder = to_grids(e, encoder_schema(arch));
    model.decoder = to_grids(load_weights(dec, decoder_schema(arch)), decoder_schema(arch));
    model.mlp = to_grids(m, mlp_schema(arch));
    return model;
}

std::function<void(Stage, int, const std::map<std::string, double>&)> progress_printer(int every) {
    return [every](Stage stage, int iter, const std::map<std::string, double>& v) {
        if (every <= 0 || iter % every != 0) {
            return;
        }
        std::cout << to_string(stage) << " iter " << iter;
        for (const auto& [k, x] : v) {
            std::cout << ' ' << k << '=' << x;
        }
        std::cout << '\n';
    };
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Render and stylize Gaussian splat scenes with any style image"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads for internal kernels (default: all cores)")
        ->check(CLI::NonNegativeNumber);

    std::vector<std::unique_ptr<Command>> commands;
    auto make = [&](const std::string& name, const std::string& help) -> Command& {
        auto c = std::make_unique<Command>();
        c->app = app.add_subcommand(name, help);
        c->app->fallthrough();
        c->app->add_option("--config", c->config_file, "JSON object of option values; the command line wins");
        commands.push_back(std::move(c));
        return *commands.back();
    };

    // ---- pretrain-decoder
    fs::path pd_content, pd_style, pd_encoder, pd_decoder_init, pd_out;
    std::string pd_mode = "fullres";
    TrainConfig pd_cfg;
    pd_cfg.iterations = 500;
    int pd_print = 50;
    {
        Command& c = make("pretrain-decoder", "Train the decoder on 2D content/style pairs");
        c.add("--content-dir", pd_content, "Directory of content PNGs", true);
        c.add("--style-dir", pd_style, "Directory of style PNGs", true);
        c.add("--encoder-weights", pd_encoder, "Encoder weight manifest prefix", true);
        c.add("--decoder-init", pd_decoder_init, "Optional starting decoder weights");
        c.add("--out", pd_out, "Output directory", true);
        c.add("--iters", pd_cfg.iterations, "Iterations");
        c.add("--size", pd_cfg.image_size, "Training crop size");
        c.add("--mode", pd_mode, "fullres | pooled");
        c.add("--seed", pd_cfg.seed, "Random seed");
        c.add("--lr", pd_cfg.decoder_lr, "Adam learning rate");
        c.add("--lambda-style", pd_cfg.lambda_style_2d, "Style loss weight");
        c.add("--checkpoint-every", pd_cfg.checkpoint_every, "Checkpoint interval (0: none)");
        c.add("--print-every", pd_print, "Progress print interval (0: silent)");
        c.run = [&, &c = c] {
            pd_cfg.mode = parse_scale_mode(pd_mode);
            pd_cfg.out_dir = pd_out;
            pd_cfg.progress = progress_printer(pd_print);
            pd_cfg.validate();
            require_path(pd_encoder.string() + ".manifest.json", "--encoder-weights");
            StylizerArch arch;
            const ParamGrids enc = load_encoder(pd_encoder, arch);
            const auto contents = load_image_directory(pd_content);
            const auto styles = load_image_directory(pd_style);
            const ParamGrids init = pd_decoder_init.empty()
                                        ? to_grids(init_decoder_weights(arch, pd_cfg.seed), decoder_schema(arch))
                                        : to_grids(load_weights(pd_decoder_init, decoder_schema(arch)),
                                                   decoder_schema(arch));
            write_run_config(c, pd_out);
            const DecoderResult r = pretrain_decoder(pd_cfg, contents, styles, enc, init);
            save_weights(to_weights(r.decoder, decoder_schema(arch)), pd_out / "decoder");
            std::cout << "final loss " << r.history.at("total").back() << "\n";
        };
    }

    // ---- pretrain-geometry
    fs::path pg_scene, pg_out, pg_points;
    std::string pg_init = "points";
    int pg_random_count = 400;
    int pg_print = 200;
    TrainConfig pg_cfg;
    {
        Command& c = make("pretrain-geometry", "Fit Gaussian geometry and color to a posed image set");
        c.add("--scene", pg_scene, "Scene directory (scene.json + PNGs)", true);
        c.add("--out", pg_out, "Output directory", true);
        c.add("--iters", pg_cfg.iterations, "Iterations");
        c.add("--init", pg_init, "points (scene points.ply or --points) | random");
        c.add("--points", pg_points, "Initial cloud PLY (default <scene>/points.ply)");
        c.add("--random-count", pg_random_count, "Gaussians for --init random");
        c.add("--seed", pg_cfg.seed, "Random seed");
        c.add("--checkpoint-every", pg_cfg.checkpoint_every, "Checkpoint interval (0: none)");
        c.add("--print-every", pg_print, "Progress print interval (0: silent)");
        c.run = [&, &c = c] {
            require_path(pg_scene / "scene.json", "--scene");
            pg_cfg.out_dir = pg_out;
            pg_cfg.progress = progress_printer(pg_print);
            pg_cfg.validate();
            const SceneDataset scene = load_scene(pg_scene);
            GaussianSet init;
            if (pg_init == "points") {
                const fs::path p = pg_points.empty() ? pg_scene / "points.ply" : pg_points;
                require_path(p, "--init points");
                init = load_gaussians(p);
            } else if (pg_init == "random") {
                if (pg_random_count <= 0) {
                    throw ConfigError("--random-count must be positive");
                }
                init = random_init(scene_bounds(scene.cameras), static_cast<std::size_t>(pg_random_count),
                                   pg_cfg.seed);
            } else {
                throw ConfigError("--init must be 'points' or 'random', got '" + pg_init + "'");
            }
            write_run_config(c, pg_out);
            const GeometryResult r = pretrain_geometry(pg_cfg, scene, std::move(init));
            save_gaussians(r.gaussians, pg_out / "gaussians.ply");
            std::cout << "mean training PSNR " << r.mean_psnr << " dB\n";
        };
    }

    // ---- train-style
    fs::path ts_scene, ts_gaussians, ts_encoder, ts_decoder, ts_styles, ts_out, ts_mlp_init;
    int ts_feature_dim = kDefaultFeatureDim;
    int ts_print = 100;
    TrainConfig ts_cfg;
    ts_cfg.iterations = 3000;
    {
        Command& c = make("train-style", "Train per-Gaussian features and the expansion MLP");
        c.add("--scene", ts_scene, "Scene directory", true);
        c.add("--gaussians", ts_gaussians, "Geometry PLY from pretrain-geometry", true);
        c.add("--encoder-weights", ts_encoder, "Encoder weight manifest prefix", true);
        c.add("--decoder-weights", ts_decoder, "Pre-trained decoder weight prefix", true);
        c.add("--styles-dir", ts_styles, "Directory of style PNGs", true);
        c.add("--out", ts_out, "Output directory", true);
        c.add("--iters", ts_cfg.iterations, "Iterations");
        c.add("--feature-dim", ts_feature_dim, "Latent feature size per Gaussian");
        c.add("--lambda1", ts_cfg.lambda1, "Content loss weight");
        c.add("--lambda2", ts_cfg.lambda2, "Style loss weight");
        c.add("--crop", ts_cfg.crop_size, "Crop size for the decoder/encoder pass");
        c.add("--feature-lr", ts_cfg.feature_lr, "Adam rate for features");
        c.add("--mlp-lr", ts_cfg.mlp_lr, "Adam rate for the MLP");
        c.add("--mlp-init", ts_mlp_init, "Optional starting MLP weights");
        c.flag("--align-to-render", ts_cfg.align_to_render, "Align against the color render, not the photo");
        c.add("--seed", ts_cfg.seed, "Random seed");
        c.add("--checkpoint-every", ts_cfg.checkpoint_every, "Checkpoint interval (0: none)");
        c.add("--print-every", ts_print, "Progress print interval (0: silent)");
        c.run = [&, &c = c] {
            require_path(ts_scene / "scene.json", "--scene");
            require_path(ts_gaussians, "--gaussians");
            require_path(ts_encoder.string() + ".manifest.json", "--encoder-weights");
            require_path(ts_decoder.string() + ".manifest.json", "--decoder-weights");
            if (ts_feature_dim <= 0) {
                throw ConfigError("--feature-dim must be positive");
            }
            ts_cfg.out_dir = ts_out;
            ts_cfg.progress = progress_printer(ts_print);
            ts_cfg.validate();
            const SceneDataset scene = load_scene(ts_scene);
            const auto styles = load_image_directory(ts_styles);
            StylizerArch arch;
            StylizerModel model;
            model.encoder = load_encoder(ts_encoder, arch);
            arch.feature_dim = ts_feature_dim;
            model.decoder = to_grids(load_weights(ts_decoder, decoder_schema(arch)), decoder_schema(arch));
            model.mlp = ts_mlp_init.empty() ? to_grids(random_weights(mlp_schema(arch), ts_cfg.seed + 3), mlp_schema(arch))
                                            : to_grids(load_weights(ts_mlp_init, mlp_schema(arch)), mlp_schema(arch));
            const GaussianSet geometry = load_gaussians(ts_gaussians);
            write_run_config(c, ts_out);
            const StyleResult r = train_style(ts_cfg, scene, geometry, model, styles);
            save_gaussians(r.gaussians, ts_out / "gaussians.ply");
            save_weights(to_weights(r.mlp, mlp_schema(arch)), ts_out / "mlp");
            const auto& h = r.history.at("align");
            std::cout << "align loss " << moving_average(h, 50, 50) << " -> " << moving_average(h, h.size(), 50)
                      << "\n";
        };
    }

    // ---- stylize
    fs::path st_gaussians, st_mlp, st_encoder, st_decoder, st_style, st_scene, st_out;
    std::string st_views = "all";
    bool st_renormalize = false;
    {
        Command& c = make("stylize", "Render stylized views for any style image (no optimization)");
        c.add("--gaussians", st_gaussians, "Feature-bearing PLY from train-style", true);
        c.add("--mlp-weights", st_mlp, "MLP weight prefix", true);
        c.add("--encoder-weights", st_encoder, "Encoder weight prefix", true);
        c.add("--decoder-weights", st_decoder, "Decoder weight prefix", true);
        c.add("--style", st_style, "Style image (PNG)", true);
        c.add("--scene", st_scene, "Scene directory providing the cameras", true);
        c.add("--views", st_views, "all | comma-separated indices");
        c.add("--out", st_out, "Output directory", true);
        c.flag("--renormalize", st_renormalize, "Re-normalize each view's features before the style transform");
        c.run = [&, &c = c] {
            for (const auto& [p, f] : {std::pair{st_gaussians, "--gaussians"}, std::pair{st_style, "--style"},
                                       std::pair{st_scene / "scene.json", "--scene"}}) {
                require_path(p, f);
            }
            const auto cameras = load_cameras(st_scene);
            const auto views = parse_views(st_views, cameras.size());
            const StylizerModel model = load_model(st_encoder, st_decoder, st_mlp);
            const GaussianSet gs = load_gaussians(st_gaussians);
            if (!gs.features_present) {
                throw ConfigError("--gaussians: the PLY carries no features; run train-style first");
            }
            const StyleCode code = compute_style_code(load_image(st_style), model.encoder, model.mode);
            write_run_config(c, st_out);
            for (int v : views) {
                const StylizedView sv =
                    stylize_view(gs, cameras[static_cast<std::size_t>(v)], code, model, st_renormalize);
                save_image(sv.image, st_out / view_file(v));
            }
            std::cout << "wrote " << views.size() << " views\n";
        };
    }

    // ---- render
    fs::path rd_gaussians, rd_scene, rd_out;
    std::string rd_views = "all";
    {
        Command& c = make("render", "Render the color of a Gaussian cloud");
        c.add("--gaussians", rd_gaussians, "PLY file", true);
        c.add("--scene", rd_scene, "Scene directory providing the cameras", true);
        c.add("--views", rd_views, "all | comma-separated indices");
        c.add("--out", rd_out, "Output directory", true);
        c.run = [&, &c = c] {
            require_path(rd_gaussians, "--gaussians");
            require_path(rd_scene / "scene.json", "--scene");
            const auto cameras = load_cameras(rd_scene);
            const auto views = parse_views(rd_views, cameras.size());
            const GaussianSet gs = load_gaussians(rd_gaussians);
            if (gs.empty()) {
                std::cerr << "warning: " << rd_gaussians.string() << " holds no Gaussians; frames will be black\n";
            }
            write_run_config(c, rd_out);
            for (int v : views) {
                save_image(rasterize(gs, cameras[static_cast<std::size_t>(v)]).color, rd_out / view_file(v));
            }
            std::cout << "wrote " << views.size() << " views\n";
        };
    }

    // ---- eval-consistency
    fs::path ev_gaussians, ev_mlp, ev_encoder, ev_decoder, ev_style, ev_scene, ev_out;
    std::string ev_views, ev_variant = "both";
    double ev_depth_tol = 0.01;
    {
        Command& c = make("eval-consistency", "Cross-view consistency of stylized outputs");
        c.add("--gaussians", ev_gaussians, "Feature-bearing PLY", true);
        c.add("--mlp-weights", ev_mlp, "MLP weight prefix", true);
        c.add("--encoder-weights", ev_encoder, "Encoder weight prefix", true);
        c.add("--decoder-weights", ev_decoder, "Decoder weight prefix", true);
        c.add("--style", ev_style, "Style image (PNG)", true);
        c.add("--scene", ev_scene, "Scene directory providing the cameras", true);
        c.add("--views", ev_views, "View pairs 'a,b' or 'a,b;c,d'", true);
        c.add("--out", ev_out, "Report path (*.json) or run directory", true);
        c.add("--variant", ev_variant, "integrated | view-specific | both");
        c.add("--depth-tolerance", ev_depth_tol, "Depth agreement threshold relative to the scene scale");
        c.run = [&, &c = c] {
            for (const auto& [p, f] : {std::pair{ev_gaussians, "--gaussians"}, std::pair{ev_style, "--style"},
                                       std::pair{ev_scene / "scene.json", "--scene"}}) {
                require_path(p, f);
            }
            if (ev_variant != "integrated" && ev_variant != "view-specific" && ev_variant != "both") {
                throw ConfigError("--variant must be integrated, view-specific or both");
            }
            const auto cameras = load_cameras(ev_scene);
            const auto pairs = parse_view_pairs(ev_views, cameras.size());
            const StylizerModel model = load_model(ev_encoder, ev_decoder, ev_mlp);
            const GaussianSet gs = load_gaussians(ev_gaussians);
            if (!gs.features_present) {
                throw ConfigError("--gaussians: the PLY carries no features; run train-style first");
            }
            const StyleCode code = compute_style_code(load_image(ev_style), model.encoder, model.mode);
            MatchOptions opts;
            opts.scene_scale = scene_bounds(cameras).radius;
            opts.depth_tolerance = ev_depth_tol;
            const std::string style_name = ev_style.filename().string();
            // A .json path names the report; anything else is the run directory.
            const bool is_file = ev_out.extension() == ".json";
            const fs::path dir = is_file ? (ev_out.has_parent_path() ? ev_out.parent_path() : fs::path("."))
                                         : ev_out;
            const fs::path report_path = is_file ? ev_out : ev_out / "consistency_report.json";
            write_run_config(c, dir);
            json report;
            if (ev_variant == "both") {
                const AblationReport r = ablation_compare(gs, cameras, pairs, code, model, opts, style_name);
                report = r.to_json();
                std::cout << "rmse_rgb integrated " << r.integrated.rmse_rgb << " view-specific "
                          << r.view_specific.rmse_rgb << " over " << r.integrated.n_matches << " matches\n";
            } else {
                const VariantReport r = evaluate_variant(gs, cameras, pairs, code, model, ev_variant == "view-specific",
                                                         opts, style_name);
                report = r.to_json();
                std::cout << "rmse_rgb " << r.rmse_rgb << " over " << r.n_matches << " matches\n";
            }
            write_file_atomic(report_path, report.dump(2) + "\n");
        };
    }

    // ---- make-toy-scene
    fs::path mt_out;
    ToySceneOptions mt_opts;
    int mt_styles = 5;
    int mt_held_out = 3;
    int mt_contents = 10;
    {
        Command& c = make("make-toy-scene", "Write a synthetic scene, image corpora and a tiny random encoder");
        c.add("--out", mt_out, "Output directory", true);
        c.add("--views", mt_opts.views, "Number of cameras");
        c.add("--size", mt_opts.size, "Image side in pixels");
        c.add("--gaussians", mt_opts.gaussians, "Ground-truth Gaussian count");
        c.add("--styles", mt_styles, "Training style images");
        c.add("--held-out-styles", mt_held_out, "Style images never used in training");
        c.add("--contents", mt_contents, "Content images for decoder pre-training");
        c.add("--seed", mt_opts.seed, "Random seed");
        c.run = [&, &c = c] {
            if (mt_styles < 1 || mt_held_out < 0 || mt_contents < 1) {
                throw ConfigError("need at least one style and one content image");
            }
            const ToyScene scene = make_toy_scene(mt_opts);
            write_run_config(c, mt_out);
            save_scene(scene.dataset, mt_out / "scene");
            save_gaussians(scene.init, mt_out / "scene" / "points.ply");
            save_gaussians(scene.truth, mt_out / "truth.ply");
            auto write_set = [&](const std::vector<Grid>& images, const fs::path& dir, const char* stem) {
                fs::create_directories(dir);
                for (std::size_t i = 0; i < images.size(); ++i) {
                    char name[48];
                    std::snprintf(name, sizeof(name), "%s_%03zu.png", stem, i);
                    save_image(images[i], dir / name);
                }
            };
            const int side = mt_opts.size;
            const auto all_styles = make_toy_styles(mt_styles + mt_held_out, side, mt_opts.seed + 1);
            write_set({all_styles.begin(), all_styles.begin() + mt_styles}, mt_out / "styles", "style");
            write_set({all_styles.begin() + mt_styles, all_styles.end()}, mt_out / "held_out_styles", "style");
            write_set(make_toy_contents(mt_contents, side, mt_opts.seed + 2), mt_out / "contents", "content");
            const StylizerArch arch = StylizerArch::tiny();
            save_weights(random_weights(encoder_schema(arch), mt_opts.seed + 4), mt_out / "encoder");
            std::cout << "wrote toy scene with " << scene.truth.size() << " Gaussians and " << scene.dataset.size()
                      << " views to " << mt_out.string() << "\n";
        };
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    if (threads > 0) {
        set_thread_count(threads);
    }
    for (const auto& c : commands) {
        if (!c->app->parsed()) {
            continue;
        }
        try {
            c->apply_config();
            c->run();
            return 0;
        } catch (const ConfigError& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
    }
    return 2;
}
