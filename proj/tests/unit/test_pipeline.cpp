#include "oracles.hpp"

#include <bmi/common/error.hpp>
#include <bmi/pipeline/commands.hpp>
#include <bmi/pipeline/config.hpp>
#include <bmi/pipeline/hash.hpp>
#include <bmi/pipeline/image_io.hpp>
#include <bmi/pipeline/manifest.hpp>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <random>

using namespace bmi;
using namespace bmi::pipeline;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Small sensor, coarse depth grid; traced tensors take well under a second.
json smallConfig(const std::string &source = "delta") {
    return {{"prescription", (oracle::dataDir() / "lenses" / "monocentric.json").string()},
            {"materials", (oracle::dataDir() / "materials.json").string()},
            {"sensor", {{"width", 48}, {"height", 32}, {"pixel_pitch_um", 2.0}, {"max_field_deg", 1.0}}},
            {"psf", {{"grid_size", 128}, {"pitch_um", 0.4}, {"pupil_samples", 32}, {"aperture_scale", 1.0}}},
            {"psf_source", source},
            {"theta_samples", {0.0, 0.5, 1.0}},
            {"depth_grid", {{"min_m", 1.0}, {"max_m", 3.0}, {"step_m", 1.0}}},
            {"render", {{"tile_size", 16}, {"patch_size", 8}, {"noise_sigma", 0.0}}},
            {"cache_dir", "cache"},
            {"output_dir", "out"},
            {"seed", 7}};
}

PipelineConfig writeAndLoad(const fs::path &dir, const json &j) {
    const fs::path path = dir / "config.json";
    std::ofstream(path) << j.dump(1);
    return loadConfig(path);
}

std::string slurp(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

struct Scene {
    fs::path rgb;
    fs::path depth;
};

// Two depth planes split down the middle, textured colour.
Scene writeScene(const fs::path &dir, const std::string &name, std::uint64_t seed, int w = 48, int h = 32) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> u(0, 255);
    Image rgb(w, h, 3), depth(w, h);
    for (double &v : rgb.data()) v = u(rng) / 255.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) depth(y, x) = x < w / 2 ? 1.0 : 3.0;
    }
    Scene s{dir / (name + ".png"), dir / (name + "_depth.png")};
    writeRgb8(s.rgb, rgb);
    writeDepthPng(s.depth, depth);
    return s;
}

} // namespace

TEST(Config, ResolvesRelativePathsAgainstItsDirectory) {
    const fs::path dir = oracle::scratchDir("config_paths");
    const PipelineConfig c = writeAndLoad(dir, smallConfig());
    EXPECT_EQ(c.cacheDir, dir / "cache");
    EXPECT_EQ(c.outputDir, dir / "out");
    EXPECT_EQ(c.sensor.width, 48);
    EXPECT_EQ(c.render.tileSize, 16);
    EXPECT_EQ(c.seed(), 7u);
    EXPECT_EQ(c.psfSource, PsfSource::Delta);
    EXPECT_EQ(c.render.depthGrid.count(), 3);
}

TEST(Config, BundledDefaultLoads) {
    const PipelineConfig c = loadConfig(oracle::dataDir() / "default_config.json");
    EXPECT_EQ(c.sensor.width, 640);
    EXPECT_EQ(c.sensor.height, 480);
    EXPECT_EQ(c.psf.gridSize, 128);
    EXPECT_EQ(c.render.depthGrid.count(), 94);
    EXPECT_TRUE(fs::exists(c.prescription));
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    json j = smallConfig();
    j["render"]["tile_sise"] = 16;
    EXPECT_THROW(parseConfig(j.dump(), "."), ConfigError);
    j = smallConfig();
    j["turbo"] = true;
    EXPECT_THROW(parseConfig(j.dump(), "."), ConfigError);
    j = smallConfig();
    j["render"]["tile_size"] = 0;
    EXPECT_THROW(parseConfig(j.dump(), "."), Error);
    j = smallConfig();
    j["theta_samples"] = {0.0, 0.5};
    EXPECT_THROW(parseConfig(j.dump(), "."), ConfigError);
    EXPECT_THROW(parseConfig("{not json", "."), ParseError);
}

TEST(Config, MissingMaterialCatalogNamesTheFile) {
    json j = smallConfig();
    j["materials"] = "/nonexistent/glass_catalog.json";
    try {
        parseConfig(j.dump(), ".");
        FAIL() << "expected an error";
    } catch (const Error &e) {
        EXPECT_NE(std::string(e.what()).find("glass_catalog.json"), std::string::npos) << e.what();
    }
}

TEST(Config, PathPrecedence) {
    const fs::path fallback = "/bundled.json";
    ::unsetenv("BMI_CONFIG");
    EXPECT_EQ(resolveConfigPath("", fallback), fallback);
    ::setenv("BMI_CONFIG", "/env.json", 1);
    EXPECT_EQ(resolveConfigPath("", fallback), fs::path("/env.json"));
    EXPECT_EQ(resolveConfigPath("/cli.json", fallback), fs::path("/cli.json"));
    ::unsetenv("BMI_CONFIG");
}

TEST(Config, PixelHashTracksPixelFieldsOnly) {
    const fs::path dir = oracle::scratchDir("config_hash");
    const PipelineConfig base = parseConfig(smallConfig().dump(), dir);
    const auto h = pixelConfigHash(base);

    json j = smallConfig();
    j["output_dir"] = "elsewhere";
    j["cache_dir"] = "other_cache";
    j["workers"] = 4;
    j["metrics"] = {{"canny_low", 0.05}};
    EXPECT_EQ(pixelConfigHash(parseConfig(j.dump(), dir)), h);
    EXPECT_EQ(opticsHash(parseConfig(j.dump(), dir)), opticsHash(base));

    j = smallConfig();
    j["render"]["noise_sigma"] = 0.01;
    EXPECT_NE(pixelConfigHash(parseConfig(j.dump(), dir)), h);
    j = smallConfig();
    j["psf"]["pupil_samples"] = 64;
    EXPECT_NE(pixelConfigHash(parseConfig(j.dump(), dir)), h);
    EXPECT_NE(opticsHash(parseConfig(j.dump(), dir)), opticsHash(base));
}

TEST(Hash, Fnv1aReferenceValues) {
    EXPECT_EQ(Fnv1a().value(), 0xcbf29ce484222325ull);
    EXPECT_EQ(Fnv1a().bytes("a", 1).value(), 0xaf63dc4c8601ec8cull);
    EXPECT_EQ(Fnv1a().bytes("foobar", 6).value(), 0x85944171f73967e8ull);
    // Strings are length-prefixed so that field boundaries cannot shift.
    EXPECT_NE(Fnv1a().text("ab").text("c").value(), Fnv1a().text("a").text("bc").value());
    EXPECT_EQ(hexHash(0xabcull), "0000000000000abc");
}

TEST(ImageIo, PngAndRawRoundTrips) {
    const fs::path dir = oracle::scratchDir("image_io");
    const Scene s = writeScene(dir, "scene", 1);
    const Image rgb = readRgb(s.rgb);
    EXPECT_EQ(rgb.width(), 48);
    EXPECT_EQ(rgb.channels(), 3);
    writeRgb8(dir / "copy.png", rgb);
    EXPECT_EQ(slurp(dir / "copy.png"), slurp(s.rgb));

    const Image depth = readDepth(s.depth);
    EXPECT_DOUBLE_EQ(depth(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(depth(0, 47), 3.0);

    Image f(5, 4, 2);
    for (std::size_t i = 0; i < f.size(); ++i) f.data()[i] = 0.125 * static_cast<double>(i) - 1.0;
    writeRawFloat(dir / "f.f32", f);
    const Image g = readRawFloat(dir / "f.f32");
    EXPECT_EQ(g.channels(), 2);
    EXPECT_TRUE(std::ranges::equal(g.data(), f.data()));
    EXPECT_THROW(readPng(dir / "missing.png"), IoError);
}

TEST(Manifest, LoadsAndRejectsDuplicates) {
    const fs::path dir = oracle::scratchDir("manifest");
    std::ofstream(dir / "m.json") << R"({"split": "val", "items": [
        {"rgb": "a.png", "depth": "a_d.png", "scene_id": "a"}, {"rgb": "b.png", "depth": "b_d.png"}]})";
    const auto m = DatasetManifest::load(dir / "m.json");
    EXPECT_EQ(m.split, Split::Val);
    ASSERT_EQ(m.items.size(), 2u);
    EXPECT_EQ(m.items[0].rgb, dir / "a.png");
    EXPECT_EQ(m.items[1].sceneId, "b");
    std::ofstream(dir / "dup.json") << R"({"split": "test", "items": [
        {"rgb": "a.png", "depth": "a_d.png", "scene_id": "x"}, {"rgb": "b.png", "depth": "b_d.png", "scene_id": "x"}]})";
    EXPECT_THROW(DatasetManifest::load(dir / "dup.json"), ParseError);
}

TEST(Render, DeltaSourceWithoutNoiseReproducesTheInput) {
    const fs::path dir = oracle::scratchDir("render_delta");
    const PipelineConfig c = writeAndLoad(dir, smallConfig());
    const Scene s = writeScene(dir, "scene", 2);
    const Image rgb = readRgb(s.rgb);
    const Image depth = readDepth(s.depth);
    for (RenderMode mode : {RenderMode::Occlusion, RenderMode::Patchwise}) {
        const auto psfs = makeProvider(c, mode);
        const auto coded = renderScene(c, *psfs, rgb, depth, mode, 0);
        for (std::size_t i = 0; i < rgb.size(); ++i) {
            ASSERT_NEAR(coded.pixels.data()[i], rgb.data()[i], 1e-12) << modeName(mode) << " " << i;
        }
    }
    EXPECT_THROW(renderScene(c, *makeProvider(c, RenderMode::Occlusion), Image(10, 10, 3), Image(10, 10),
                             RenderMode::Occlusion, 0),
                 Error);
}

TEST(Render, TracedRenderIsByteReproducible) {
    const fs::path dir = oracle::scratchDir("render_traced");
    json j = smallConfig("traced");
    j["render"]["noise_sigma"] = 0.01;
    const PipelineConfig c = writeAndLoad(dir, j);
    const Scene s = writeScene(dir, "scene", 3);

    const auto a = runRender(c, s.rgb, s.depth, RenderMode::Occlusion, dir / "a", 11);
    const auto b = runRender(c, s.rgb, s.depth, RenderMode::Occlusion, dir / "b", 11);
    EXPECT_EQ(a.hash, b.hash);
    EXPECT_EQ(a.png.filename(), b.png.filename());
    EXPECT_EQ(slurp(a.png), slurp(b.png));
    EXPECT_EQ(slurp(a.sidecar), slurp(b.sidecar));
    EXPECT_TRUE(fs::exists(c.cacheDir));

    const auto other = runRender(c, s.rgb, s.depth, RenderMode::Occlusion, dir / "c", 12);
    EXPECT_NE(other.hash, a.hash);
    EXPECT_NE(slurp(other.sidecar), slurp(a.sidecar));

    const json prov = json::parse(slurp(a.provenance));
    EXPECT_EQ(prov["seed"], 11);
}

TEST(Batch, WritesIndexAndResumes) {
    const fs::path dir = oracle::scratchDir("batch");
    const PipelineConfig c = writeAndLoad(dir, smallConfig("traced"));
    json items = json::array();
    for (int i = 0; i < 3; ++i) {
        const std::string name = "s" + std::to_string(i);
        writeScene(dir, name, 10 + i);
        items.push_back({{"rgb", name + ".png"}, {"depth", name + "_depth.png"}, {"scene_id", name}});
    }
    std::ofstream(dir / "manifest.json") << json{{"split", "test"}, {"items", items}}.dump();

    ASSERT_EQ(runBatch(c, dir / "manifest.json", dir / "out", 5), 0);
    const std::string index = slurp(dir / "out" / "index.jsonl");
    EXPECT_EQ(std::count(index.begin(), index.end(), '\n'), 3);
    EXPECT_EQ(json::parse(index.substr(0, index.find('\n')))["scene_id"], "s0");

    std::vector<fs::path> pngs;
    for (const auto &e : fs::directory_iterator(dir / "out" / "coded")) {
        if (e.path().extension() == ".png") pngs.push_back(e.path());
    }
    ASSERT_EQ(pngs.size(), 3u);
    std::ranges::sort(pngs);
    const std::string first = slurp(pngs[0]);

    // Interrupted run: one item lost its outputs and its completion record.
    fs::remove(pngs[0]);
    for (const auto &e : fs::directory_iterator(dir / "out" / "records")) {
        if (e.path().filename().string().starts_with(pngs[0].stem().string())) fs::remove(e.path());
    }
    ASSERT_EQ(runBatch(c, dir / "manifest.json", dir / "out", 5), 0);
    EXPECT_EQ(slurp(pngs[0]), first);
    EXPECT_EQ(slurp(dir / "out" / "index.jsonl"), index);
}

TEST(Evaluate, PerfectPredictionsAndUnmatchedFiles) {
    const fs::path dir = oracle::scratchDir("evaluate");
    const PipelineConfig c = writeAndLoad(dir, smallConfig());
    fs::create_directories(dir / "gt");
    fs::create_directories(dir / "pred");
    const Scene s = writeScene(dir / "gt", "scene", 4);
    fs::copy_file(s.rgb, dir / "pred" / "scene_occlusion_0123456789abcdef.png");
    fs::copy_file(s.depth, dir / "pred" / "scene_depth.png");

    EXPECT_EQ(runEvaluate(c, dir / "pred", dir / "gt", EvalKind::Image, dir / "img"), 0);
    const json img = json::parse(slurp(dir / "img" / "metrics.json"));
    EXPECT_EQ(img["mean"]["occlusion"]["psnr"], "inf");
    EXPECT_DOUBLE_EQ(img["mean"]["occlusion"]["ssim"].get<double>(), 1.0);
    EXPECT_TRUE(fs::exists(dir / "img" / "metrics.txt"));

    fs::create_directories(dir / "pd");
    fs::copy_file(s.depth, dir / "pd" / "scene_depth.png");
    fs::copy_file(s.depth, dir / "pd" / "orphan.png");
    EXPECT_EQ(runEvaluate(c, dir / "pd", dir / "gt", EvalKind::Depth, dir / "dep"), 1);
    const json dep = json::parse(slurp(dir / "dep" / "metrics.json"));
    EXPECT_DOUBLE_EQ(dep["mean"]["all"]["delta1"].get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(dep["mean"]["all"]["rmse"].get<double>(), 0.0);
}
