#pragma once

#include <bmi/formation/layers.hpp>
#include <bmi/optics/psf.hpp>
#include <bmi/psfmap/psf_map.hpp>
#include <bmi/quality/artifact_score.hpp>
#include <bmi/quality/losses.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bmi::pipeline {

enum class PsfSource { Traced, Delta };

/// Everything a run needs, with relative paths already resolved against the
/// directory of the config file.
struct PipelineConfig {
    std::filesystem::path prescription;
    std::filesystem::path materials;
    psfmap::SensorGeometry sensor;
    formation::RenderConfig render;
    std::vector<double> thetaSamples = psfmap::defaultThetaSamples();
    optics::PsfOptions psf;
    PsfSource psfSource = PsfSource::Traced;
    /// Apply the sRGB transfer curve when reading 8-bit inputs.
    bool srgbDecode = false;
    quality::ArtifactParams artifact;
    quality::LossWeights losses;
    std::filesystem::path cacheDir;
    std::filesystem::path outputDir;
    /// Concurrent batch items; 0 = one per hardware thread.
    unsigned workers = 1;
    /// Threads used inside one render; 0 = hardware concurrency.
    unsigned threads = 0;

    std::uint64_t seed() const { return render.seed; }
    void validate() const;
};

/// Parses a config document. Relative paths resolve against `baseDir`.
PipelineConfig parseConfig(std::string_view jsonText, const std::filesystem::path &baseDir);
PipelineConfig loadConfig(const std::filesystem::path &path);

/// Config path selection: explicit argument, then $BMI_CONFIG, then `fallback`.
std::filesystem::path resolveConfigPath(const std::string &cliValue, const std::filesystem::path &fallback);

/// FNV-1a over every field that can change output pixels, including the
/// contents of the prescription and material files. Output locations, worker
/// counts and metric parameters are excluded. The seed is tracked separately.
std::uint64_t pixelConfigHash(const PipelineConfig &config);

/// Hash of the fields that determine the traced PSF tensor.
std::uint64_t opticsHash(const PipelineConfig &config);

} // namespace bmi::pipeline
