#pragma once

#include <bmi/formation/kernel.hpp>
#include <bmi/formation/layers.hpp>
#include <bmi/pipeline/config.hpp>
#include <bmi/psfmap/psf_cache.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace bmi::pipeline {

enum class RenderMode { Occlusion, Patchwise };
RenderMode parseRenderMode(const std::string &text);
std::string modeName(RenderMode mode);

enum class EvalKind { Depth, Image, Artifact };
EvalKind parseEvalKind(const std::string &text);

/// Traced PSF tensor for the config, loaded from the cache directory when a
/// tensor with the same optics hash exists, otherwise traced and stored.
std::shared_ptr<const psfmap::PsfTensor> ensureTensor(const PipelineConfig &config);

std::filesystem::path mapCachePath(const PipelineConfig &config);

/// Tile-centre PSF map for the config's sensor and tile size; built on demand.
std::shared_ptr<const psfmap::PsfCache> ensureMapCache(const PipelineConfig &config);

/// Map cache whose records are unit impulses at the kernel anchor.
psfmap::PsfCache deltaMapCache(const PipelineConfig &config);

std::unique_ptr<formation::PsfProvider> makeProvider(const PipelineConfig &config, RenderMode mode);

/// layerize -> composite (or patch-wise) -> noise. Depth values of exactly
/// zero mark missing measurements and are rendered at the far end of the
/// depth grid.
formation::CodedImage renderScene(const PipelineConfig &config, const formation::PsfProvider &psfs, const Image &rgb,
                                  const Image &depthM, RenderMode mode, std::uint64_t seed);

struct RenderOutputs {
    std::filesystem::path png;
    std::filesystem::path sidecar;
    std::filesystem::path provenance;
    std::string hash;
};

/// Hash naming the outputs of one render: pixel config, input bytes, seed, mode.
std::uint64_t renderHash(const PipelineConfig &config, std::uint64_t rgbHash, std::uint64_t depthHash,
                         std::uint64_t seed, RenderMode mode);

RenderOutputs runRender(const PipelineConfig &config, const std::filesystem::path &rgbPath,
                        const std::filesystem::path &depthPath, RenderMode mode, const std::filesystem::path &outDir,
                        std::uint64_t seed);

struct TraceRequest {
    double depth = 1.0;
    double theta = 0.0;
    double wavelength = 587.6;
    /// Write the 3 x 10 field/depth panel instead of a single PSF.
    bool panel = false;
};

/// Depth columns of the panel, near to far.
std::vector<double> panelDepths();

void runTracePsf(const PipelineConfig &config, const TraceRequest &request, const std::filesystem::path &outDir);

std::filesystem::path runBuildCache(const PipelineConfig &config);

/// Returns the number of pairs that could not be evaluated.
int runEvaluate(const PipelineConfig &config, const std::filesystem::path &predDir,
                const std::filesystem::path &gtDir, EvalKind kind, const std::filesystem::path &outDir);

/// Returns the number of failed items.
int runBatch(const PipelineConfig &config, const std::filesystem::path &manifestPath,
             const std::filesystem::path &outDir, std::uint64_t seed, RenderMode mode = RenderMode::Occlusion);

} // namespace bmi::pipeline
