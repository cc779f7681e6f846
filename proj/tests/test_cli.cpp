// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#include "support/cli_runner.hpp"
#include "support/temp_dir.hpp"

#include "splatstyle/image_io.hpp"
#include "splatstyle/ply.hpp"
#include "splatstyle/weights_io.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <fstream>
#include <regex>

using namespace splatstyle;
using namespace splatstyle::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

/// Small toy scene plus a short pipeline run shared by the tests of this file.
class CliPipeline : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = new TempDir();
        const fs::path root = dir_->path();
        auto ok = [](const CliResult& r) {
            ASSERT_EQ(r.code, 0) << r.output;
        };
        ok(run_cli({"make-toy-scene", "--out", (root / "toy").string(), "--size", "24", "--gaussians", "120",
                    "--views", "4", "--styles", "2", "--held-out-styles", "1", "--contents", "2"}));
        ok(run_cli({"pretrain-geometry", "--scene", (root / "toy/scene").string(), "--out",
                    (root / "geo").string(), "--iters", "30"}));
        ok(run_cli({"pretrain-decoder", "--content-dir", (root / "toy/contents").string(), "--style-dir",
                    (root / "toy/styles").string(), "--encoder-weights", (root / "toy/encoder").string(), "--out",
                    (root / "dec").string(), "--iters", "3", "--size", "16", "--mode", "pooled"}));
        ok(run_cli({"train-style", "--scene", (root / "toy/scene").string(), "--gaussians",
                    (root / "geo/gaussians.ply").string(), "--encoder-weights", (root / "toy/encoder").string(),
                    "--decoder-weights", (root / "dec/decoder").string(), "--styles-dir",
                    (root / "toy/styles").string(), "--out", (root / "sty").string(), "--iters", "3",
                    "--feature-dim", "8", "--crop", "8"}));
    }
    static void TearDownTestSuite() {
        delete dir_;
        dir_ = nullptr;
    }

    static fs::path root() { return dir_->path(); }
    static std::string p(const std::string& rel) { return (dir_->path() / rel).string(); }

    static TempDir* dir_;
};
TempDir* CliPipeline::dir_ = nullptr;

} // namespace

TEST(Cli, NoSubcommandIsUsageError) {
    EXPECT_EQ(run_cli({}).code, 2);
    EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
}

TEST(Cli, HelpExitsZero) {
    const CliResult r = run_cli({"stylize", "--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.output.find("--renormalize"), std::string::npos);
}

TEST(Cli, MissingContentDirNamesTheFlag) {
    TempDir t;
    const CliResult r = run_cli({"pretrain-decoder", "--style-dir", t.path().string(), "--encoder-weights",
                                 (t / "enc").string(), "--out", (t / "out").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("--content-dir"), std::string::npos) << r.output;
}

TEST(Cli, NonexistentScenePathIsConfigError) {
    TempDir t;
    const CliResult r = run_cli({"pretrain-geometry", "--scene", (t / "nope").string(), "--out", (t / "o").string()});
    EXPECT_EQ(r.code, 2) << r.output;
}

TEST_F(CliPipeline, ToySceneLayout) {
    for (const char* f : {"toy/scene/scene.json", "toy/scene/points.ply", "toy/truth.ply", "toy/encoder.manifest.json",
                          "toy/encoder.bin", "toy/styles/style_000.png", "toy/held_out_styles/style_000.png",
                          "toy/contents/content_000.png", "toy/run_config.json"}) {
        EXPECT_TRUE(fs::exists(root() / f)) << f;
    }
}

TEST_F(CliPipeline, DecoderRunEmitsWeightsLogAndConfig) {
    EXPECT_TRUE(fs::exists(root() / "dec/decoder.manifest.json"));
    EXPECT_TRUE(fs::exists(root() / "dec/decoder.bin"));
    const json cfg = read_json(root() / "dec/run_config.json");
    EXPECT_EQ(cfg["command"], "pretrain-decoder");
    EXPECT_EQ(cfg["options"]["iters"], 3);
    EXPECT_EQ(cfg["options"]["mode"], "pooled");
    std::ifstream log(root() / "dec/train_log.jsonl");
    int lines = 0;
    for (std::string line; std::getline(log, line); ++lines) {
        const json j = json::parse(line);
        EXPECT_EQ(j["stage"], "decoder");
        EXPECT_TRUE(j.contains("total"));
    }
    EXPECT_EQ(lines, 3);
}

TEST_F(CliPipeline, DecoderSameSeedIdenticalBlobs) {
    const CliResult r = run_cli({"pretrain-decoder", "--content-dir", p("toy/contents"), "--style-dir",
                                 p("toy/styles"), "--encoder-weights", p("toy/encoder"), "--out", p("dec2"),
                                 "--iters", "3", "--size", "16", "--mode", "pooled"});
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_EQ(read_bytes(root() / "dec/decoder.bin"), read_bytes(root() / "dec2/decoder.bin"));
    EXPECT_EQ(read_bytes(root() / "dec/train_log.jsonl"), read_bytes(root() / "dec2/train_log.jsonl"));
}

TEST_F(CliPipeline, GeometryRunEmitsPlyAndPsnr) {
    EXPECT_FALSE(load_gaussians(root() / "geo/gaussians.ply").empty());
    std::ifstream log(root() / "geo/train_log.jsonl");
    std::string line, last;
    while (std::getline(log, line)) {
        last = line;
    }
    EXPECT_TRUE(json::parse(last).contains("psnr"));
}

TEST_F(CliPipeline, GeometryRandomInitWritesValidPly) {
    const CliResult r = run_cli({"pretrain-geometry", "--scene", p("toy/scene"), "--out", p("geo_rand"), "--iters",
                                 "2", "--init", "random", "--random-count", "50"});
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_EQ(load_gaussians(root() / "geo_rand/gaussians.ply").size(), 50u);
}

TEST_F(CliPipeline, BadInitIsConfigError) {
    EXPECT_EQ(run_cli({"pretrain-geometry", "--scene", p("toy/scene"), "--out", p("x"), "--init", "mesh"}).code, 2);
}

TEST_F(CliPipeline, StyleRunEmitsFeaturesAndMlp) {
    const GaussianSet gs = load_gaussians(root() / "sty/gaussians.ply");
    EXPECT_TRUE(gs.features_present);
    EXPECT_EQ(gs.feature_dim, 8);
    EXPECT_TRUE(fs::exists(root() / "sty/mlp.manifest.json"));
    EXPECT_TRUE(fs::exists(root() / "sty/train_log.jsonl"));
}

TEST_F(CliPipeline, StyleDefaultsFollowTheMethod) {
    const json o = read_json(root() / "sty/run_config.json")["options"];
    EXPECT_EQ(o["lambda1"], 1.0);
    EXPECT_EQ(o["lambda2"], 1.0);
    TempDir t;
    // --help output carries no defaults, so read them from an echoed config with no overrides.
    const CliResult r = run_cli({"train-style", "--scene", p("toy/scene"), "--gaussians", p("geo/gaussians.ply"),
                                 "--encoder-weights", p("toy/encoder"), "--decoder-weights", p("dec/decoder"),
                                 "--styles-dir", p("toy/styles"), "--out", t.path().string(), "--iters", "1",
                                 "--crop", "8"});
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_EQ(read_json(t / "run_config.json")["options"]["feature-dim"], 32);
}

TEST_F(CliPipeline, StylizeHeldOutStyleWritesRequestedViews) {
    const CliResult r = run_cli({"stylize", "--gaussians", p("sty/gaussians.ply"), "--mlp-weights", p("sty/mlp"),
                                 "--encoder-weights", p("toy/encoder"), "--decoder-weights", p("dec/decoder"),
                                 "--style", p("toy/held_out_styles/style_000.png"), "--scene", p("toy/scene"),
                                 "--views", "0,3", "--out", p("styl")});
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_TRUE(fs::exists(root() / "styl/view_000.png"));
    EXPECT_TRUE(fs::exists(root() / "styl/view_003.png"));
    EXPECT_FALSE(fs::exists(root() / "styl/view_001.png"));
    EXPECT_EQ(load_image(root() / "styl/view_000.png").width(), 24);
}

TEST_F(CliPipeline, StylizeRenormalizeChangesOutput) {
    auto run = [&](const std::string& out, bool renorm) {
        if (renorm) {
            return run_cli({"stylize", "--gaussians", p("sty/gaussians.ply"), "--mlp-weights", p("sty/mlp"),
                            "--encoder-weights", p("toy/encoder"), "--decoder-weights", p("dec/decoder"), "--style",
                            p("toy/styles/style_001.png"), "--scene", p("toy/scene"), "--views", "1", "--out",
                            p(out), "--renormalize"});
        }
        return run_cli({"stylize", "--gaussians", p("sty/gaussians.ply"), "--mlp-weights", p("sty/mlp"),
                        "--encoder-weights", p("toy/encoder"), "--decoder-weights", p("dec/decoder"), "--style",
                        p("toy/styles/style_001.png"), "--scene", p("toy/scene"), "--views", "1", "--out", p(out)});
    };
    ASSERT_EQ(run("s_int", false).code, 0);
    ASSERT_EQ(run("s_vs", true).code, 0);
    EXPECT_TRUE(read_json(root() / "s_vs/run_config.json")["options"]["renormalize"].get<bool>());
    EXPECT_NE(read_bytes(root() / "s_int/view_001.png"), read_bytes(root() / "s_vs/view_001.png"));
}

TEST_F(CliPipeline, StylizeRejectsFeaturelessPly) {
    const CliResult r = run_cli({"stylize", "--gaussians", p("geo/gaussians.ply"), "--mlp-weights", p("sty/mlp"),
                                 "--encoder-weights", p("toy/encoder"), "--decoder-weights", p("dec/decoder"),
                                 "--style", p("toy/styles/style_000.png"), "--scene", p("toy/scene"), "--out",
                                 p("bad")});
    EXPECT_EQ(r.code, 2) << r.output;
}

TEST_F(CliPipeline, RenderIsDeterministic) {
    ASSERT_EQ(run_cli({"render", "--gaussians", p("geo/gaussians.ply"), "--scene", p("toy/scene"), "--out", p("r1")})
                  .code,
              0);
    ASSERT_EQ(run_cli({"render", "--gaussians", p("geo/gaussians.ply"), "--scene", p("toy/scene"), "--out", p("r2"),
                       "--threads", "2"})
                  .code,
              0);
    for (int v = 0; v < 4; ++v) {
        const std::string f = "view_00" + std::to_string(v) + ".png";
        EXPECT_EQ(read_bytes(root() / "r1" / f), read_bytes(root() / "r2" / f)) << f;
    }
}

TEST_F(CliPipeline, RenderEmptyPlyGivesBlackFramesAndWarning) {
    save_gaussians(GaussianSet(), root() / "empty.ply");
    const CliResult r =
        run_cli({"render", "--gaussians", p("empty.ply"), "--scene", p("toy/scene"), "--views", "2", "--out", p("re")});
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find("warning"), std::string::npos);
    const Grid img = load_image(root() / "re/view_002.png");
    for (std::size_t i = 0; i < img.size(); ++i) {
        ASSERT_EQ(img[i], 0.0f);
    }
}

TEST_F(CliPipeline, RenderViewOutOfRangeIsConfigError) {
    EXPECT_EQ(run_cli({"render", "--gaussians", p("geo/gaussians.ply"), "--scene", p("toy/scene"), "--views", "9",
                       "--out", p("rx")})
                  .code,
              2);
}

TEST_F(CliPipeline, EvalBothEmitsComparativeReport) {
    const CliResult r = run_cli({"eval-consistency", "--gaussians", p("sty/gaussians.ply"), "--mlp-weights",
                                 p("sty/mlp"), "--encoder-weights", p("toy/encoder"), "--decoder-weights",
                                 p("dec/decoder"), "--style", p("toy/styles/style_000.png"), "--scene",
                                 p("toy/scene"), "--views", "0,1;1,2", "--out", p("ev/report.json")});
    ASSERT_EQ(r.code, 0) << r.output;
    const json report = read_json(root() / "ev/report.json");
    EXPECT_EQ(report["variant"], "both");
    ASSERT_EQ(report["reports"].size(), 2u);
    EXPECT_EQ(report["reports"][0]["variant"], "integrated");
    EXPECT_EQ(report["reports"][1]["variant"], "view-specific");
    EXPECT_TRUE(fs::exists(root() / "ev/run_config.json"));
}

TEST_F(CliPipeline, EvalIdenticalViewsGiveZero) {
    const CliResult r = run_cli({"eval-consistency", "--gaussians", p("sty/gaussians.ply"), "--mlp-weights",
                                 p("sty/mlp"), "--encoder-weights", p("toy/encoder"), "--decoder-weights",
                                 p("dec/decoder"), "--style", p("toy/styles/style_000.png"), "--scene",
                                 p("toy/scene"), "--views", "2,2", "--variant", "integrated", "--out", p("ev0")});
    ASSERT_EQ(r.code, 0) << r.output;
    const json report = read_json(root() / "ev0/consistency_report.json");
    EXPECT_EQ(report["rmse_rgb"], 0.0);
    EXPECT_EQ(report["rmse_feature"], 0.0);
}

TEST_F(CliPipeline, EvalMalformedViewsIsConfigError) {
    for (const char* views : {"0", "0;1", "a,b", "0,1;", "0,1,2", "0,99"}) {
        const CliResult r = run_cli({"eval-consistency", "--gaussians", p("sty/gaussians.ply"), "--mlp-weights",
                                     p("sty/mlp"), "--encoder-weights", p("toy/encoder"), "--decoder-weights",
                                     p("dec/decoder"), "--style", p("toy/styles/style_000.png"), "--scene",
                                     p("toy/scene"), "--views", views, "--out", p("evbad")});
        EXPECT_EQ(r.code, 2) << views << ": " << r.output;
    }
}

TEST_F(CliPipeline, ConfigFileFillsOptionsAndFlagsOverride) {
    {
        std::ofstream(root() / "cfg.json") << R"({"scene": ")" << p("toy/scene") << R"(", "iters": 4, "seed": 9})";
    }
    const CliResult r =
        run_cli({"pretrain-geometry", "--config", p("cfg.json"), "--out", p("geo_cfg"), "--iters", "2"});
    ASSERT_EQ(r.code, 0) << r.output;
    const json o = read_json(root() / "geo_cfg/run_config.json")["options"];
    EXPECT_EQ(o["iters"], 2);
    EXPECT_EQ(o["seed"], 9);
    EXPECT_EQ(o["scene"], p("toy/scene"));
}

TEST_F(CliPipeline, ConfigFileUnknownKeyRejected) {
    {
        std::ofstream(root() / "bad.json") << R"({"iters": 4, "learning_rate": 3})";
    }
    const CliResult r = run_cli(
        {"pretrain-geometry", "--config", p("bad.json"), "--scene", p("toy/scene"), "--out", p("geo_bad")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("learning_rate"), std::string::npos) << r.output;
}

TEST_F(CliPipeline, RuntimeErrorExitsOne) {
    // A corrupt PLY passes flag validation and fails while loading.
    {
        std::ofstream(root() / "corrupt.ply") << "ply\nformat ascii 1.0\nend_header\n";
    }
    const CliResult r =
        run_cli({"render", "--gaussians", p("corrupt.ply"), "--scene", p("toy/scene"), "--out", p("rc")});
    EXPECT_EQ(r.code, 1) << r.output;
}
