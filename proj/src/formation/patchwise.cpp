#include <bmi/formation/composite.hpp>

#include <bmi/common/error.hpp>
#include <bmi/common/parallel.hpp>
#include <bmi/formation/fft_convolve.hpp>
#include <bmi/psfmap/psf_cache.hpp>

#include <algorithm>
#include <cmath>

namespace bmi::formation {

namespace {

struct PatchResult {
    int y0 = 0;
    int x0 = 0;
    int rows = 0;
    int cols = 0;
    std::vector<double> values;
};

} // namespace

Image renderPatchwise(const Image &rgb, const Image &depthMap, const PsfProvider &psfs, const RenderConfig &config) {
    config.validate();
    if (rgb.width() != depthMap.width() || rgb.height() != depthMap.height() || depthMap.channels() != 1) {
        throw ValidationError("rgb and depth map differ in size");
    }
    for (double d : depthMap.data()) {
        if (!std::isfinite(d) || d <= 0.0) throw ValidationError("depth must be positive and finite");
    }
    if (psfs.layerCount() != config.depthGrid.count()) {
        throw ValidationError("PSF provider and render config use different depth grids");
    }

    const int width = rgb.width();
    const int height = rgb.height();
    const int channels = rgb.channels();
    const int radius = psfs.maxRadius();
    const psfmap::TileGrid patches{width, height, config.patchSize};
    const int patchCount = patches.rows() * patches.cols();

    std::vector<PatchResult> results(static_cast<std::size_t>(patchCount));
    parallelFor(results.size(), [&](std::size_t p) {
        const int pr = static_cast<int>(p) / patches.cols();
        const int pc = static_cast<int>(p) % patches.cols();
        const int y0 = patches.y0(pr), y1 = patches.y1(pr);
        const int x0 = patches.x0(pc), x1 = patches.x1(pc);

        std::vector<double> depths;
        depths.reserve(static_cast<std::size_t>(y1 - y0) * (x1 - x0));
        for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) depths.push_back(std::clamp(depthMap(y, x), config.depthGrid.min, config.depthGrid.max));
        }
        // Upper median for even counts.
        auto mid = depths.begin() + static_cast<std::ptrdiff_t>(depths.size() / 2);
        std::nth_element(depths.begin(), mid, depths.end());
        const int layer = config.depthGrid.nearestIndex(*mid);

        // Patch content sits `radius` pixels in from the buffer origin; the
        // buffer is large enough that the circular wrap only folds zeros.
        const int rows = fft::goodSize((y1 - y0) + 2 * radius);
        const int cols = fft::goodSize((x1 - x0) + 2 * radius);
        FftWorkspace ws(rows, cols);
        auto kernelHat = ws.makeSpectrum();
        auto imageHat = ws.makeSpectrum();
        auto blurred = ws.makeReal();

        PatchResult &out = results[p];
        out.y0 = y0 - radius;
        out.x0 = x0 - radius;
        out.rows = (y1 - y0) + 2 * radius;
        out.cols = (x1 - x0) + 2 * radius;
        const std::size_t extSize = static_cast<std::size_t>(out.rows) * out.cols;
        out.values.assign(extSize * channels, 0.0);

        for (int c = 0; c < channels; ++c) {
            const Kernel kernel = psfs.kernel(c, layer, patches.centerY(pr), patches.centerX(pc));
            ws.transformKernel(kernel, kernelHat);
            ws.clearInput();
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) {
                    ws.input()[static_cast<std::size_t>(y - y0 + radius) * cols + (x - x0 + radius)] = rgb.at(c, y, x);
                }
            }
            ws.transformInput(imageHat);
            ws.multiplyInverse(imageHat, kernelHat, blurred);
            double *dst = out.values.data() + static_cast<std::size_t>(c) * extSize;
            for (int y = 0; y < out.rows; ++y) {
                for (int x = 0; x < out.cols; ++x) {
                    dst[static_cast<std::size_t>(y) * out.cols + x] = blurred[static_cast<std::size_t>(y) * cols + x];
                }
            }
        }
    });

    Image out(width, height, channels);
    for (const PatchResult &r : results) {
        const std::size_t extSize = static_cast<std::size_t>(r.rows) * r.cols;
        for (int c = 0; c < channels; ++c) {
            for (int y = 0; y < r.rows; ++y) {
                const int yy = r.y0 + y;
                if (yy < 0 || yy >= height) continue;
                for (int x = 0; x < r.cols; ++x) {
                    const int xx = r.x0 + x;
                    if (xx < 0 || xx >= width) continue;
                    out.at(c, yy, xx) += r.values[static_cast<std::size_t>(c) * extSize + static_cast<std::size_t>(y) * r.cols + x];
                }
            }
        }
    }
    return out;
}

} // namespace bmi::formation
