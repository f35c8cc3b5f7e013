#include <bmi/pipeline/commands.hpp>

#include <bmi/common/error.hpp>
#include <bmi/common/parallel.hpp>
#include <bmi/formation/composite.hpp>
#include <bmi/formation/psf_sources.hpp>
#include <bmi/optics/material.hpp>
#include <bmi/pipeline/hash.hpp>
#include <bmi/pipeline/image_io.hpp>
#include <bmi/pipeline/manifest.hpp>
#include <bmi/quality/image_metrics.hpp>
#include <bmi/quality/report.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace bmi::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

RenderMode parseRenderMode(const std::string &text) {
    if (text == "occlusion") return RenderMode::Occlusion;
    if (text == "patchwise") return RenderMode::Patchwise;
    throw ConfigError("render mode must be 'occlusion' or 'patchwise'");
}

std::string modeName(RenderMode mode) { return mode == RenderMode::Occlusion ? "occlusion" : "patchwise"; }

EvalKind parseEvalKind(const std::string &text) {
    if (text == "depth") return EvalKind::Depth;
    if (text == "image") return EvalKind::Image;
    if (text == "artifact") return EvalKind::Artifact;
    throw ConfigError("evaluation kind must be 'depth', 'image' or 'artifact'");
}

namespace {

void writeText(const fs::path &path, const std::string &text) { writeFileAtomic(path, {text.begin(), text.end()}); }

std::string dump(const json &j) { return j.dump(2) + "\n"; }

psfmap::TileGrid tileGrid(const PipelineConfig &config) {
    return {config.sensor.width, config.sensor.height, config.render.tileSize};
}

int sensorPsfSide(const PipelineConfig &config) {
    return psfmap::resizedSide(config.psf.gridSize, config.psf.pitchUm, config.sensor.pixelPitchUm);
}

formation::Kernel deltaKernel(int side) {
    std::vector<double> taps(static_cast<std::size_t>(side) * side, 0.0);
    taps[static_cast<std::size_t>(side / 2) * side + side / 2] = 1.0;
    return formation::Kernel(side, std::move(taps));
}

} // namespace

std::shared_ptr<const psfmap::PsfTensor> ensureTensor(const PipelineConfig &config) {
    const auto depths = config.render.depthGrid.values();
    if (config.psfSource == PsfSource::Delta) {
        return std::make_shared<const psfmap::PsfTensor>(
            psfmap::deltaPsfTensor(config.thetaSamples, depths, config.psf.gridSize, config.psf.pitchUm));
    }
    const fs::path path = config.cacheDir / ("psf_tensor_" + hexHash(opticsHash(config)) + ".bin");
    if (fs::exists(path)) return std::make_shared<const psfmap::PsfTensor>(psfmap::PsfTensor::load(path));

    const auto catalog = optics::MaterialCatalog::load(config.materials);
    const auto lens = optics::loadPrescription(config.prescription, catalog);
    std::cerr << "tracing PSF tensor (" << config.thetaSamples.size() << " fields x " << depths.size()
              << " depths x 3 channels)\n";
    auto tensor = std::make_shared<psfmap::PsfTensor>(psfmap::buildPsfTensor(lens, config.thetaSamples, depths, config.psf));
    fs::create_directories(config.cacheDir);
    tensor->save(path);
    return tensor;
}

fs::path mapCachePath(const PipelineConfig &config) {
    Fnv1a h;
    h.text("map-v1").u64(opticsHash(config));
    h.u64(static_cast<std::uint64_t>(config.sensor.width)).u64(static_cast<std::uint64_t>(config.sensor.height));
    h.f64(config.sensor.pixelPitchUm).f64(config.sensor.maxFieldDeg);
    h.u64(static_cast<std::uint64_t>(config.render.tileSize));
    return config.cacheDir / ("psf_map_" + hexHash(h.value()) + ".bin");
}

psfmap::PsfCache deltaMapCache(const PipelineConfig &config) {
    const psfmap::TileGrid tiles = tileGrid(config);
    psfmap::CacheHeader header;
    header.channels = 3;
    header.depths = config.render.depthGrid.count();
    header.tileRows = tiles.rows();
    header.tileCols = tiles.cols();
    header.psfSide = sensorPsfSide(config);
    header.pitchNm = static_cast<std::int32_t>(std::lround(config.sensor.pixelPitchUm * 1000.0));
    std::vector<float> records(header.recordCount() * header.recordSize(), 0.0f);
    const std::size_t anchor = static_cast<std::size_t>(header.psfSide / 2) * header.psfSide + header.psfSide / 2;
    for (std::size_t r = 0; r < header.recordCount(); ++r) records[r * header.recordSize() + anchor] = 1.0f;
    return psfmap::PsfCache(header, std::move(records));
}

std::shared_ptr<const psfmap::PsfCache> ensureMapCache(const PipelineConfig &config) {
    if (config.psfSource == PsfSource::Delta) return std::make_shared<const psfmap::PsfCache>(deltaMapCache(config));
    const fs::path path = mapCachePath(config);
    if (!fs::exists(path)) {
        const auto tensor = ensureTensor(config);
        psfmap::buildPsfMapCache(*tensor, config.sensor, config.render.tileSize, path);
    }
    return std::make_shared<const psfmap::PsfCache>(psfmap::PsfCache::load(path));
}

std::unique_ptr<formation::PsfProvider> makeProvider(const PipelineConfig &config, RenderMode mode) {
    if (mode == RenderMode::Occlusion) {
        return std::make_unique<formation::CachePsfProvider>(ensureMapCache(config), tileGrid(config));
    }
    if (config.psfSource == PsfSource::Delta) {
        return std::make_unique<formation::UniformPsfProvider>(deltaKernel(sensorPsfSide(config)), 3,
                                                               config.render.depthGrid.count());
    }
    return std::make_unique<formation::TensorPsfProvider>(ensureTensor(config), config.sensor);
}

formation::CodedImage renderScene(const PipelineConfig &config, const formation::PsfProvider &psfs, const Image &rgb,
                                  const Image &depthM, RenderMode mode, std::uint64_t seed) {
    if (rgb.channels() != 3) throw ValidationError("render input must be RGB");
    if (rgb.width() != config.sensor.width || rgb.height() != config.sensor.height) {
        std::ostringstream msg;
        msg << "input is " << rgb.width() << "x" << rgb.height() << " but the sensor is " << config.sensor.width << "x"
            << config.sensor.height;
        throw ValidationError(msg.str());
    }
    if (depthM.width() != rgb.width() || depthM.height() != rgb.height() || depthM.channels() != 1) {
        throw ValidationError("depth map does not match the RGB image");
    }
    Image depth = depthM;
    for (double &d : depth.data()) {
        if (d == 0.0) d = config.render.depthGrid.max;
    }

    formation::RenderConfig rc = config.render;
    rc.seed = seed;
    Image clean = mode == RenderMode::Occlusion
                      ? formation::compositeOcclusion(formation::layerize(rgb, depth, rc), psfs, rc)
                      : formation::renderPatchwise(rgb, depth, psfs, rc);

    formation::CodedImage out;
    out.pixels = formation::addGaussianNoise(clean, rc.noiseSigma, seed);
    out.provenance.prescription = config.prescription.filename().string();
    out.provenance.configHash = hexHash(pixelConfigHash(config));
    out.provenance.seed = seed;
    return out;
}

std::uint64_t renderHash(const PipelineConfig &config, std::uint64_t rgbHash, std::uint64_t depthHash,
                         std::uint64_t seed, RenderMode mode) {
    return Fnv1a()
        .text("render-v1")
        .u64(pixelConfigHash(config))
        .u64(rgbHash)
        .u64(depthHash)
        .u64(seed)
        .text(modeName(mode))
        .value();
}

RenderOutputs runRender(const PipelineConfig &config, const fs::path &rgbPath, const fs::path &depthPath,
                        RenderMode mode, const fs::path &outDir, std::uint64_t seed) {
    const std::uint64_t rgbHash = hashFile(rgbPath);
    const std::uint64_t depthHash = hashFile(depthPath);
    const std::string hash = hexHash(renderHash(config, rgbHash, depthHash, seed, mode));
    const std::string stem = rgbPath.stem().string() + "_" + modeName(mode) + "_" + hash;

    const auto psfs = makeProvider(config, mode);
    const auto coded =
        renderScene(config, *psfs, readRgb(rgbPath, config.srgbDecode), readDepth(depthPath), mode, seed);

    RenderOutputs out{outDir / (stem + ".png"), outDir / (stem + ".f32"), outDir / (stem + ".json"), hash};
    writeRgb8(out.png, coded.pixels);
    writeRawFloat(out.sidecar, coded.pixels);
    const json record = {{"mode", modeName(mode)},
                         {"seed", seed},
                         {"prescription", coded.provenance.prescription},
                         {"config_hash", coded.provenance.configHash},
                         {"provenance_hash", hash},
                         {"inputs", {{"rgb", rgbPath.filename().string()}, {"rgb_hash", hexHash(rgbHash)},
                                     {"depth", depthPath.filename().string()}, {"depth_hash", hexHash(depthHash)}}},
                         {"outputs", {{"png", out.png.filename().string()}, {"sidecar", out.sidecar.filename().string()}}}};
    writeText(out.provenance, dump(record));
    return out;
}

std::vector<double> panelDepths() { return {0.8, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0}; }

namespace {

json statsJson(const optics::PsfGrid &grid) {
    const optics::PsfStats s = optics::psfStats(grid);
    return {{"depth_m", grid.depth},
            {"field_deg", grid.fieldAngle},
            {"wavelength_nm", grid.wavelength},
            {"captured_energy_fraction", grid.capturedEnergyFraction},
            {"rays_launched", grid.raysLaunched},
            {"rays_survived", grid.raysSurvived},
            {"rays_in_grid", grid.raysInGrid},
            {"centroid_um", {s.centroidX, s.centroidY}},
            {"second_moment_radius_um", s.secondMomentRadius}};
}

// Peak-scaled 16-bit samples of one PSF, written into a larger canvas.
void blitPeakScaled(const optics::PsfGrid &grid, PngData &canvas, int top, int left) {
    const double peak = *std::ranges::max_element(grid.samples);
    for (int r = 0; r < grid.side; ++r) {
        for (int c = 0; c < grid.side; ++c) {
            const double v = peak > 0.0 ? grid.at(r, c) / peak : 0.0;
            canvas.samples[static_cast<std::size_t>(top + r) * canvas.width + left + c] =
                static_cast<std::uint16_t>(std::lround(v * 65535.0));
        }
    }
}

std::string fmt(double v, int precision) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(precision);
    s << v;
    return s.str();
}

} // namespace

void runTracePsf(const PipelineConfig &config, const TraceRequest &request, const fs::path &outDir) {
    const auto catalog = optics::MaterialCatalog::load(config.materials);
    const auto lens = optics::loadPrescription(config.prescription, catalog);
    if (request.theta < 0.0 || request.theta > config.sensor.maxFieldDeg) {
        throw OutOfRangeError("field angle outside [0, " + fmt(config.sensor.maxFieldDeg, 2) + "] deg");
    }

    if (!request.panel) {
        const auto grid = optics::computePsf(lens, request.depth, request.theta, request.wavelength, config.psf);
        const std::string stem = "psf_" + fmt(request.depth, 2) + "m_" + fmt(request.theta, 2) + "deg_" +
                                 fmt(request.wavelength, 1) + "nm";
        PngData png{grid.side, grid.side, 1, 16, std::vector<std::uint16_t>(grid.samples.size())};
        blitPeakScaled(grid, png, 0, 0);
        writePng(outDir / (stem + ".png"), png);
        writeText(outDir / (stem + ".json"), dump(statsJson(grid)));
        return;
    }

    const std::vector<double> fields{0.0, 3.0, 6.0};
    const auto depths = panelDepths();
    std::vector<optics::PsfGrid> grids(fields.size() * depths.size());
    parallelFor(grids.size(), [&](std::size_t i) {
        grids[i] = optics::computePsf(lens, depths[i % depths.size()], fields[i / depths.size()], request.wavelength,
                                      config.psf);
    });
    const int side = config.psf.gridSize;
    PngData panel{side * static_cast<int>(depths.size()), side * static_cast<int>(fields.size()), 1, 16, {}};
    panel.samples.assign(static_cast<std::size_t>(panel.width) * panel.height, 0);
    json stats = json::array();
    for (std::size_t i = 0; i < grids.size(); ++i) {
        blitPeakScaled(grids[i], panel, side * static_cast<int>(i / depths.size()),
                       side * static_cast<int>(i % depths.size()));
        stats.push_back(statsJson(grids[i]));
    }
    const std::string stem = "psf_panel_" + fmt(request.wavelength, 1) + "nm";
    writePng(outDir / (stem + ".png"), panel);
    writeText(outDir / (stem + ".json"), dump(stats));
}

fs::path runBuildCache(const PipelineConfig &config) {
    if (config.psfSource == PsfSource::Delta) {
        const fs::path path = config.cacheDir / "psf_map_delta.bin";
        deltaMapCache(config).save(path);
        return path;
    }
    const fs::path path = mapCachePath(config);
    const auto tensor = ensureTensor(config);
    psfmap::buildPsfMapCache(*tensor, config.sensor, config.render.tileSize, path);
    return path;
}

namespace {

struct Pair {
    std::string name;
    fs::path pred;
    fs::path gt;
    std::string group; // render mode token, if any
};

bool isInput(const fs::path &p, EvalKind kind) {
    const std::string ext = p.extension().string();
    if (kind == EvalKind::Depth) return ext == ".png" || ext == ".f32";
    return ext == ".png";
}

std::vector<fs::path> listFiles(const fs::path &dir, EvalKind kind) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto &entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && isInput(entry.path(), kind)) files.push_back(entry.path());
    }
    std::ranges::sort(files);
    return files;
}

// A prediction matches the ground truth with the same stem, or failing that
// the longest ground-truth stem it starts with followed by '_' (render
// outputs are named <scene>_<mode>_<hash>).
std::vector<Pair> matchPairs(const std::vector<fs::path> &preds, const std::vector<fs::path> &gts,
                             std::vector<std::string> &unmatched) {
    std::map<std::string, fs::path> byStem;
    for (const auto &g : gts) byStem.emplace(g.stem().string(), g);
    std::vector<Pair> pairs;
    for (const auto &p : preds) {
        const std::string stem = p.stem().string();
        const fs::path *best = nullptr;
        std::size_t bestLen = 0;
        for (const auto &[gStem, gPath] : byStem) {
            const bool exact = gStem == stem;
            const bool prefix = stem.size() > gStem.size() && stem.compare(0, gStem.size(), gStem) == 0 &&
                                stem[gStem.size()] == '_';
            if ((exact || prefix) && gStem.size() >= bestLen) {
                best = &gPath;
                bestLen = gStem.size();
            }
        }
        if (!best) {
            unmatched.push_back(p.filename().string() + ": no ground truth");
            continue;
        }
        std::string group;
        for (const char *mode : {"occlusion", "patchwise"}) {
            if (stem.find(std::string("_") + mode) != std::string::npos) group = mode;
        }
        pairs.push_back({stem, p, *best, group});
    }
    return pairs;
}

} // namespace

int runEvaluate(const PipelineConfig &config, const fs::path &predDir, const fs::path &gtDir, EvalKind kind,
                const fs::path &outDir) {
    std::vector<std::string> errors;
    const auto pairs = matchPairs(listFiles(predDir, kind), listFiles(gtDir, kind), errors);

    std::vector<std::optional<quality::MetricsReport>> reports(pairs.size());
    std::vector<std::string> pairErrors(pairs.size());
    parallelFor(pairs.size(), [&](std::size_t i) {
        const Pair &p = pairs[i];
        quality::MetricsReport r;
        r.artifactParams = config.artifact;
        r.lossWeights = config.losses;
        try {
            if (kind == EvalKind::Depth) {
                r.depth = quality::depthMetrics(readDepth(p.pred), readDepth(p.gt));
            } else {
                const Image pred = readRgb(p.pred, config.srgbDecode);
                const Image gt = readRgb(p.gt, config.srgbDecode);
                if (kind == EvalKind::Image) {
                    r.psnr = quality::psnr(pred, gt);
                    r.ssim = quality::ssim(pred, gt);
                } else {
                    r.artifactScore = quality::artifactScore(pred, gt, config.artifact).score;
                }
            }
            reports[i] = r;
        } catch (const std::exception &e) {
            pairErrors[i] = p.name + ": " + e.what();
        }
    });
    for (const auto &e : pairErrors) {
        if (!e.empty()) errors.push_back(e);
    }

    // Aggregates are means of per-pair values, per render-mode group.
    std::map<std::string, std::map<std::string, std::pair<double, int>>> sums;
    json items = json::array();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (!reports[i]) continue;
        json j = quality::toJson(*reports[i]);
        j.erase("loss_weights");
        j.erase("artifact_params");
        j["name"] = pairs[i].name;
        if (!pairs[i].group.empty()) j["mode"] = pairs[i].group;
        items.push_back(j);
        auto add = [&](const std::string &key, double v) {
            auto &s = sums[pairs[i].group.empty() ? "all" : pairs[i].group][key];
            s.first += v;
            s.second += 1;
        };
        const auto &r = *reports[i];
        if (r.depth) {
            add("delta1", r.depth->delta1);
            add("delta2", r.depth->delta2);
            add("delta3", r.depth->delta3);
            add("abs_rel", r.depth->absRel);
            add("rmse", r.depth->rmse);
        }
        if (r.psnr) add("psnr", *r.psnr);
        if (r.ssim) add("ssim", *r.ssim);
        if (r.artifactScore) add("artifact_score", *r.artifactScore);
    }
    json means = json::object();
    for (const auto &[group, metrics] : sums) {
        for (const auto &[key, s] : metrics) means[group][key] = quality::jsonNumber(s.first / s.second);
    }

    quality::MetricsReport params;
    params.artifactParams = config.artifact;
    params.lossWeights = config.losses;
    const std::string kindName = kind == EvalKind::Depth ? "depth" : kind == EvalKind::Image ? "image" : "artifact";
    json report = {{"kind", kindName}, {"pairs", items}, {"mean", means}, {"errors", errors}};
    if (kind == EvalKind::Artifact) report["artifact_params"] = quality::toJson(params)["artifact_params"];
    report["ssim_params"] = {{"window", 11}, {"sigma", 1.5}, {"k1", 0.01}, {"k2", 0.03}};
    writeText(outDir / "metrics.json", dump(report));

    // Plain-text table; depth columns follow the usual delta1..3, rmse, abs_rel order.
    std::vector<std::string> columns;
    if (kind == EvalKind::Depth) columns = {"delta1", "delta2", "delta3", "rmse", "abs_rel"};
    if (kind == EvalKind::Image) columns = {"psnr", "ssim"};
    if (kind == EvalKind::Artifact) columns = {"artifact_score"};
    std::ostringstream table;
    table << "name";
    for (const auto &c : columns) table << '\t' << c;
    table << '\n';
    auto cell = [](const json &v) {
        if (v.is_string()) return v.get<std::string>();
        return fmt(v.get<double>(), 4);
    };
    for (const auto &it : items) {
        table << it["name"].get<std::string>();
        for (const auto &c : columns) table << '\t' << (it.contains(c) ? cell(it[c]) : "-");
        table << '\n';
    }
    for (const auto &[group, m] : means.items()) {
        table << "mean(" << group << ")";
        for (const auto &c : columns) table << '\t' << (m.contains(c) ? cell(m[c]) : "-");
        table << '\n';
    }
    writeText(outDir / "metrics.txt", table.str());
    for (const auto &e : errors) std::cerr << "evaluate: " << e << '\n';
    return static_cast<int>(errors.size());
}

int runBatch(const PipelineConfig &config, const fs::path &manifestPath, const fs::path &outDir, std::uint64_t seed,
             RenderMode mode) {
    const DatasetManifest manifest = DatasetManifest::load(manifestPath);
    const auto psfs = makeProvider(config, mode);
    const std::uint64_t configHash = pixelConfigHash(config);

    std::vector<std::optional<json>> records(manifest.items.size());
    std::vector<std::string> failures(manifest.items.size());
    auto work = [&](std::size_t i) {
        const ManifestItem &item = manifest.items[i];
        try {
            const std::uint64_t rgbHash = hashFile(item.rgb);
            const std::uint64_t depthHash = hashFile(item.depth);
            const std::uint64_t itemSeed = Fnv1a().u64(seed).text(item.sceneId).value();
            const std::string hash = hexHash(renderHash(config, rgbHash, depthHash, itemSeed, mode));
            const std::string stem = item.sceneId + "_" + hash;
            const fs::path recordPath = outDir / "records" / (stem + ".json");

            // The record is written last, so its presence marks a finished item.
            if (fs::exists(recordPath)) {
                std::ifstream in(recordPath);
                records[i] = json::parse(in);
                return;
            }

            const Image rgb = readRgb(item.rgb, config.srgbDecode);
            const Image depth = readDepth(item.depth);
            const auto coded = renderScene(config, *psfs, rgb, depth, mode, itemSeed);

            Image layered = depth;
            for (double &d : layered.data()) {
                if (d > 0.0) d = config.render.depthGrid.depth(formation::quantizeDepth(d, config.render.depthGrid));
            }
            const std::string coded8 = "coded/" + stem + ".png";
            const std::string codedF = "coded/" + stem + ".f32";
            const std::string depthPng = "depth/" + stem + ".png";
            const std::string depthRaw = "depth/" + stem + "_raw.f32";
            const std::string depthLayer = "depth/" + stem + "_layer.f32";
            writeRgb8(outDir / coded8, coded.pixels);
            writeRawFloat(outDir / codedF, coded.pixels);
            writeDepthPng(outDir / depthPng, depth);
            writeRawFloat(outDir / depthRaw, depth);
            writeRawFloat(outDir / depthLayer, layered);

            json record = {{"scene_id", item.sceneId},
                           {"split", splitName(manifest.split)},
                           {"mode", modeName(mode)},
                           {"seed", itemSeed},
                           {"config_hash", hexHash(configHash)},
                           {"provenance_hash", hash},
                           {"input_hashes", {{"rgb", hexHash(rgbHash)}, {"depth", hexHash(depthHash)}}},
                           {"outputs",
                            {{"coded_png", coded8},
                             {"coded_raw", codedF},
                             {"depth_png", depthPng},
                             {"depth_raw", depthRaw},
                             {"depth_layer", depthLayer}}}};
            writeText(recordPath, record.dump() + "\n");
            records[i] = std::move(record);
        } catch (const std::exception &e) {
            failures[i] = e.what();
        }
    };

    unsigned workers = config.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.workers;
    workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, manifest.items.size())));
    if (workers <= 1) {
        for (std::size_t i = 0; i < manifest.items.size(); ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < manifest.items.size(); i = next++) work(i);
            });
        }
    }

    std::string index;
    int failed = 0;
    for (std::size_t i = 0; i < manifest.items.size(); ++i) {
        if (records[i]) {
            index += records[i]->dump() + "\n";
        } else {
            ++failed;
            std::cerr << "batch: " << manifest.items[i].sceneId << ": " << failures[i] << '\n';
        }
    }
    writeText(outDir / "index.jsonl", index);
    return failed;
}

} // namespace bmi::pipeline
