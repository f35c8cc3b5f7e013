#include <bmi/common/error.hpp>
#include <bmi/common/parallel.hpp>
#include <bmi/pipeline/commands.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace bmi::pipeline;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;

    void attach(CLI::App *cmd) {
        cmd->add_option("--config", config, "pipeline config (JSON); defaults to $BMI_CONFIG, then the bundled config");
        cmd->add_option("--seed", seed, "noise seed, overriding the config");
        cmd->add_option("--out", out, "output directory, overriding the config");
    }

    PipelineConfig load(fs::path &outDir, std::uint64_t &seedOut) const {
        PipelineConfig c = loadConfig(resolveConfigPath(config, BMI_DEFAULT_CONFIG));
        if (seed) c.render.seed = *seed;
        seedOut = c.render.seed;
        outDir = out.empty() ? c.outputDir : fs::path(out);
        bmi::setThreadCount(c.threads);
        return c;
    }
};

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Depth-coded imaging simulator: PSF tracing, occlusion-aware rendering and evaluation"};
    app.require_subcommand(1);

    Common traceOpts, cacheOpts, renderOpts, evalOpts, batchOpts;

    TraceRequest trace;
    auto *traceCmd = app.add_subcommand("trace-psf", "trace one PSF, or the 3 x 10 field/depth panel");
    traceOpts.attach(traceCmd);
    traceCmd->add_option("--depth", trace.depth, "object depth in metres")->check(CLI::PositiveNumber);
    traceCmd->add_option("--theta", trace.theta, "field angle in degrees");
    traceCmd->add_option("--wavelength", trace.wavelength, "wavelength in nm (656.3, 587.6 or 486.1)");
    traceCmd->add_flag("--panel", trace.panel, "fields {0, 3, 6} deg x ten depths from 0.8 to 10 m");

    auto *cacheCmd = app.add_subcommand("build-cache", "trace the PSF tensor and write the tile PSF map");
    cacheOpts.attach(cacheCmd);

    std::string rgbPath, depthPath, mode = "occlusion";
    auto *renderCmd = app.add_subcommand("render", "render a coded image from an RGB-D pair");
    renderOpts.attach(renderCmd);
    renderCmd->add_option("--rgb", rgbPath, "8-bit RGB PNG")->required()->check(CLI::ExistingFile);
    renderCmd->add_option("--depth", depthPath, "16-bit PNG (mm) or raw float32 (m)")->required()->check(CLI::ExistingFile);
    renderCmd->add_option("--mode", mode, "occlusion | patchwise")->check(CLI::IsMember({"occlusion", "patchwise"}));

    std::string predDir, gtDir, kind = "image";
    auto *evalCmd = app.add_subcommand("evaluate", "compare predictions against ground truth");
    evalOpts.attach(evalCmd);
    evalCmd->add_option("--pred", predDir, "prediction directory")->required()->check(CLI::ExistingDirectory);
    evalCmd->add_option("--gt", gtDir, "ground-truth directory")->required()->check(CLI::ExistingDirectory);
    evalCmd->add_option("--kind", kind, "depth | image | artifact")->check(CLI::IsMember({"depth", "image", "artifact"}));

    std::string manifestPath, batchMode = "occlusion";
    auto *batchCmd = app.add_subcommand("batch", "render every item of a dataset manifest");
    batchOpts.attach(batchCmd);
    batchCmd->add_option("--manifest", manifestPath, "dataset manifest (JSON)")->required()->check(CLI::ExistingFile);
    batchCmd->add_option("--mode", batchMode, "occlusion | patchwise")->check(CLI::IsMember({"occlusion", "patchwise"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2; // usage errors share the generic error code
    }

    try {
        fs::path outDir;
        std::uint64_t seed = 0;
        if (*traceCmd) {
            const auto config = traceOpts.load(outDir, seed);
            runTracePsf(config, trace, outDir);
        } else if (*cacheCmd) {
            const auto config = cacheOpts.load(outDir, seed);
            std::cout << runBuildCache(config).string() << '\n';
        } else if (*renderCmd) {
            const auto config = renderOpts.load(outDir, seed);
            const auto out = runRender(config, rgbPath, depthPath, parseRenderMode(mode), outDir, seed);
            std::cout << out.png.string() << '\n';
        } else if (*evalCmd) {
            const auto config = evalOpts.load(outDir, seed);
            return runEvaluate(config, predDir, gtDir, parseEvalKind(kind), outDir) == 0 ? 0 : 1;
        } else if (*batchCmd) {
            const auto config = batchOpts.load(outDir, seed);
            return runBatch(config, manifestPath, outDir, seed, parseRenderMode(batchMode)) == 0 ? 0 : 1;
        }
    } catch (const bmi::Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
