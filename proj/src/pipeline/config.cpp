#include <bmi/pipeline/config.hpp>

#include <bmi/common/error.hpp>
#include <bmi/pipeline/hash.hpp>

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace bmi::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void rejectUnknown(const json &obj, const std::set<std::string> &known, const std::string &where) {
    for (const auto &[key, _] : obj.items()) {
        if (!known.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <class T> void read(const json &obj, const char *key, T &out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception &e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

const json &section(const json &root, const char *key) {
    static const json empty = json::object();
    if (!root.contains(key)) return empty;
    const json &s = root.at(key);
    if (!s.is_object()) throw ConfigError(std::string("'") + key + "' must be an object");
    return s;
}

fs::path resolve(const fs::path &base, const std::string &value) {
    const fs::path p(value);
    return p.is_absolute() ? p : (base / p).lexically_normal();
}

} // namespace

void PipelineConfig::validate() const {
    if (!fs::exists(prescription)) throw ConfigError("prescription file not found: " + prescription.string());
    if (!fs::exists(materials)) throw ConfigError("material catalog not found: " + materials.string());
    sensor.validate();
    render.validate();
    artifact.validate();
    losses.validate();
    if (thetaSamples.empty()) throw ConfigError("theta_samples must not be empty");
    for (std::size_t i = 0; i < thetaSamples.size(); ++i) {
        if (!(thetaSamples[i] >= 0.0) || (i > 0 && !(thetaSamples[i] > thetaSamples[i - 1]))) {
            throw ConfigError("theta_samples must be non-negative and strictly increasing");
        }
    }
    if (thetaSamples.front() != 0.0 || thetaSamples.back() < sensor.maxFieldDeg) {
        throw ConfigError("theta_samples must span [0, max_field_deg]");
    }
    if (psf.gridSize <= 0 || psf.pupilSamples <= 0 || !(psf.pitchUm > 0.0) || !(psf.apertureScale > 0.0)) {
        throw ConfigError("psf options must be positive");
    }
    psfmap::resizedSide(psf.gridSize, psf.pitchUm, sensor.pixelPitchUm); // throws on non-integer ratio
}

PipelineConfig parseConfig(std::string_view jsonText, const fs::path &baseDir) {
    json root;
    try {
        root = json::parse(jsonText);
    } catch (const json::parse_error &e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    if (!root.is_object()) throw ParseError("config must be a JSON object");
    rejectUnknown(root,
                  {"prescription", "materials", "sensor", "psf", "psf_source", "theta_samples", "depth_grid", "render",
                   "input", "metrics", "cache_dir", "output_dir", "seed", "workers", "threads", "$schema",
                   "description"},
                  "config");

    PipelineConfig c;
    std::string prescription, materials, cacheDir = "cache", outputDir = "out", source = "traced";
    if (!root.contains("prescription") || !root.contains("materials")) {
        throw ConfigError("config needs 'prescription' and 'materials'");
    }
    read(root, "prescription", prescription);
    read(root, "materials", materials);
    read(root, "cache_dir", cacheDir);
    read(root, "output_dir", outputDir);
    read(root, "psf_source", source);
    read(root, "theta_samples", c.thetaSamples);
    read(root, "seed", c.render.seed);
    read(root, "workers", c.workers);
    read(root, "threads", c.threads);
    c.prescription = resolve(baseDir, prescription);
    c.materials = resolve(baseDir, materials);
    c.cacheDir = resolve(baseDir, cacheDir);
    c.outputDir = resolve(baseDir, outputDir);
    if (source == "traced") {
        c.psfSource = PsfSource::Traced;
    } else if (source == "delta") {
        c.psfSource = PsfSource::Delta;
    } else {
        throw ConfigError("psf_source must be 'traced' or 'delta'");
    }

    const json &sensor = section(root, "sensor");
    rejectUnknown(sensor, {"width", "height", "pixel_pitch_um", "max_field_deg"}, "sensor");
    read(sensor, "width", c.sensor.width);
    read(sensor, "height", c.sensor.height);
    read(sensor, "pixel_pitch_um", c.sensor.pixelPitchUm);
    read(sensor, "max_field_deg", c.sensor.maxFieldDeg);

    const json &psf = section(root, "psf");
    rejectUnknown(psf, {"grid_size", "pitch_um", "pupil_samples", "aperture_scale"}, "psf");
    read(psf, "grid_size", c.psf.gridSize);
    read(psf, "pitch_um", c.psf.pitchUm);
    read(psf, "pupil_samples", c.psf.pupilSamples);
    read(psf, "aperture_scale", c.psf.apertureScale);

    const json &grid = section(root, "depth_grid");
    rejectUnknown(grid, {"min_m", "max_m", "step_m"}, "depth_grid");
    read(grid, "min_m", c.render.depthGrid.min);
    read(grid, "max_m", c.render.depthGrid.max);
    read(grid, "step_m", c.render.depthGrid.step);

    const json &render = section(root, "render");
    rejectUnknown(render, {"tile_size", "patch_size", "noise_sigma"}, "render");
    read(render, "tile_size", c.render.tileSize);
    read(render, "patch_size", c.render.patchSize);
    read(render, "noise_sigma", c.render.noiseSigma);

    const json &input = section(root, "input");
    rejectUnknown(input, {"srgb_decode"}, "input");
    read(input, "srgb_decode", c.srgbDecode);

    const json &metrics = section(root, "metrics");
    rejectUnknown(metrics,
                  {"canny_low", "canny_high", "gaussian_sigma", "dilation_radius", "dilation_iterations",
                   "silog_lambda", "gamma_cont", "gamma_msfr", "gamma_silog"},
                  "metrics");
    read(metrics, "canny_low", c.artifact.cannyLow);
    read(metrics, "canny_high", c.artifact.cannyHigh);
    read(metrics, "gaussian_sigma", c.artifact.gaussianSigma);
    read(metrics, "dilation_radius", c.artifact.dilationRadius);
    read(metrics, "dilation_iterations", c.artifact.dilationIterations);
    read(metrics, "silog_lambda", c.losses.silogLambda);
    read(metrics, "gamma_cont", c.losses.content);
    read(metrics, "gamma_msfr", c.losses.msfr);
    read(metrics, "gamma_silog", c.losses.silog);

    c.validate();
    return c;
}

PipelineConfig loadConfig(const fs::path &path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parseConfig(text.str(), fs::absolute(path).parent_path());
}

fs::path resolveConfigPath(const std::string &cliValue, const fs::path &fallback) {
    if (!cliValue.empty()) return cliValue;
    if (const char *env = std::getenv("BMI_CONFIG"); env && *env) return env;
    return fallback;
}

std::uint64_t opticsHash(const PipelineConfig &c) {
    Fnv1a h;
    h.text("optics-v1");
    h.u64(hashFile(c.prescription)).u64(hashFile(c.materials));
    h.u64(static_cast<std::uint64_t>(c.psfSource));
    h.u64(static_cast<std::uint64_t>(c.psf.gridSize)).f64(c.psf.pitchUm);
    h.u64(static_cast<std::uint64_t>(c.psf.pupilSamples)).f64(c.psf.apertureScale);
    h.u64(c.thetaSamples.size());
    for (double t : c.thetaSamples) h.f64(t);
    h.f64(c.render.depthGrid.min).f64(c.render.depthGrid.max).f64(c.render.depthGrid.step);
    return h.value();
}

std::uint64_t pixelConfigHash(const PipelineConfig &c) {
    Fnv1a h;
    h.text("pixels-v1").u64(opticsHash(c));
    h.u64(static_cast<std::uint64_t>(c.sensor.width)).u64(static_cast<std::uint64_t>(c.sensor.height));
    h.f64(c.sensor.pixelPitchUm).f64(c.sensor.maxFieldDeg);
    h.u64(static_cast<std::uint64_t>(c.render.tileSize)).u64(static_cast<std::uint64_t>(c.render.patchSize));
    h.f64(c.render.noiseSigma);
    h.u64(c.srgbDecode ? 1 : 0);
    return h.value();
}

} // namespace bmi::pipeline
