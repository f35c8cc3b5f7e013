#include <bmi/formation/composite.hpp>

#include <bmi/common/error.hpp>
#include <bmi/common/parallel.hpp>
#include <bmi/formation/fft_convolve.hpp>
#include <bmi/psfmap/psf_cache.hpp>

#include <algorithm>

namespace bmi::formation {

namespace {

struct TileResult {
    int y0 = 0;
    int x0 = 0;
    int rows = 0;
    int cols = 0;
    std::vector<double> values; // channel-major over the extended region
};

/// Ramp weight of a pixel for a tile spanning [lo, hi) with blend radius r.
double rampWeight(int p, int lo, int hi, int r) {
    if (r == 0) return (p >= lo && p < hi) ? 1.0 : 0.0;
    const double centre = p + 0.5;
    const double rise = std::clamp((centre - (lo - r)) / (2.0 * r), 0.0, 1.0);
    const double fall = std::clamp(((hi + r) - centre) / (2.0 * r), 0.0, 1.0);
    return rise * fall;
}

TileResult renderTile(const DepthLayerStack &stack, const PsfProvider &psfs, const psfmap::TileGrid &tiles, int tr,
                      int tc, int radius, double epsilon) {
    const int width = stack.width();
    const int height = stack.height();
    const int channels = stack.channels();
    const int y0 = tiles.y0(tr), y1 = tiles.y1(tr);
    const int x0 = tiles.x0(tc), x1 = tiles.x1(tc);

    // Input window reaches two radii past the core: one for the blended
    // border, one for the kernel support.
    const int iy0 = y0 - 2 * radius;
    const int ix0 = x0 - 2 * radius;
    const int ih = (y1 - y0) + 4 * radius;
    const int iw = (x1 - x0) + 4 * radius;
    const int rows = fft::goodSize(ih);
    const int cols = fft::goodSize(iw);

    TileResult out;
    out.y0 = std::max(0, y0 - radius);
    out.x0 = std::max(0, x0 - radius);
    out.rows = std::min(height, y1 + radius) - out.y0;
    out.cols = std::min(width, x1 + radius) - out.x0;
    const std::size_t extSize = static_cast<std::size_t>(out.rows) * out.cols;
    out.values.assign(extSize * channels, 0.0);

    std::vector<bool> present(static_cast<std::size_t>(stack.layerCount()), false);
    for (int y = std::max(0, iy0); y < std::min(height, iy0 + ih); ++y) {
        for (int x = std::max(0, ix0); x < std::min(width, ix0 + iw); ++x) {
            const auto k = stack.label(y, x);
            if (k >= 0) present[static_cast<std::size_t>(k)] = true;
        }
    }

    FftWorkspace ws(rows, cols);
    auto alphaHat = ws.makeSpectrum();
    auto cumulativeHat = ws.makeSpectrum();
    auto imageHat = ws.makeSpectrum();
    auto kernelHat = ws.makeSpectrum();
    auto blurredE = ws.makeReal();
    auto blurredA = ws.makeReal();
    auto blurredI = ws.makeReal();
    std::vector<double> cumulative(static_cast<std::size_t>(rows) * cols, 0.0);

    auto forEachInput = [&](auto &&fn) {
        for (int y = std::max(0, iy0); y < std::min(height, iy0 + ih); ++y) {
            for (int x = std::max(0, ix0); x < std::min(width, ix0 + iw); ++x) {
                fn(y, x, static_cast<std::size_t>(y - iy0) * cols + (x - ix0));
            }
        }
    };

    const int centerY = tiles.centerY(tr);
    const int centerX = tiles.centerX(tc);
    for (int k = 0; k < stack.layerCount(); ++k) {
        if (!present[static_cast<std::size_t>(k)]) continue;

        ws.clearInput();
        forEachInput([&](int y, int x, std::size_t i) {
            if (stack.label(y, x) == k) {
                ws.input()[i] = 1.0;
                cumulative[i] += 1.0;
            }
        });
        ws.transformInput(alphaHat);
        std::copy(cumulative.begin(), cumulative.end(), ws.input().data());
        ws.transformInput(cumulativeHat);

        for (int c = 0; c < channels; ++c) {
            const Kernel kernel = psfs.kernel(c, k, centerY, centerX);
            if (kernel.radius() > radius) throw ValidationError("kernel exceeds the provider's declared radius");
            ws.transformKernel(kernel, kernelHat);

            ws.clearInput();
            const auto plane = stack.content().plane(c);
            forEachInput([&](int y, int x, std::size_t i) {
                if (stack.label(y, x) == k) ws.input()[i] = plane[static_cast<std::size_t>(y) * width + x];
            });
            ws.transformInput(imageHat);

            ws.multiplyInverse(cumulativeHat, kernelHat, blurredE);
            ws.multiplyInverse(alphaHat, kernelHat, blurredA);
            ws.multiplyInverse(imageHat, kernelHat, blurredI);

            double *acc = out.values.data() + static_cast<std::size_t>(c) * extSize;
            for (int y = 0; y < out.rows; ++y) {
                const std::size_t row = static_cast<std::size_t>(out.y0 + y - iy0) * cols + (out.x0 - ix0);
                for (int x = 0; x < out.cols; ++x) {
                    const double e = blurredE[row + x];
                    double a = 0.0;
                    double v = 0.0;
                    if (e >= epsilon) {
                        a = blurredA[row + x] / e;
                        v = blurredI[row + x] / e;
                    }
                    double &p = acc[static_cast<std::size_t>(y) * out.cols + x];
                    p = p * (1.0 - a) + v;
                }
            }
        }
    }
    return out;
}

} // namespace

Image compositeOcclusion(const DepthLayerStack &stack, const PsfProvider &psfs, const RenderConfig &config,
                         double epsilon) {
    config.validate();
    if (psfs.layerCount() != stack.layerCount()) {
        throw ValidationError("layer stack and PSF provider use different depth grids");
    }
    const psfmap::TileGrid tiles{stack.width(), stack.height(), config.tileSize};
    const int radius = psfs.maxRadius();
    const int tileCount = tiles.rows() * tiles.cols();

    std::vector<TileResult> results(static_cast<std::size_t>(tileCount));
    parallelFor(results.size(), [&](std::size_t t) {
        const int tr = static_cast<int>(t) / tiles.cols();
        const int tc = static_cast<int>(t) % tiles.cols();
        results[t] = renderTile(stack, psfs, tiles, tr, tc, radius, epsilon);
    });

    // Canonical-order merge keeps the output independent of thread count.
    const int channels = stack.channels();
    Image sum(stack.width(), stack.height(), channels);
    Image weight(stack.width(), stack.height(), 1);
    for (int t = 0; t < tileCount; ++t) {
        const TileResult &r = results[static_cast<std::size_t>(t)];
        const int tr = t / tiles.cols();
        const int tc = t % tiles.cols();
        const std::size_t extSize = static_cast<std::size_t>(r.rows) * r.cols;
        for (int y = 0; y < r.rows; ++y) {
            const double wy = rampWeight(r.y0 + y, tiles.y0(tr), tiles.y1(tr), radius);
            for (int x = 0; x < r.cols; ++x) {
                const double w = wy * rampWeight(r.x0 + x, tiles.x0(tc), tiles.x1(tc), radius);
                if (w == 0.0) continue;
                weight(r.y0 + y, r.x0 + x) += w;
                for (int c = 0; c < channels; ++c) {
                    sum.at(c, r.y0 + y, r.x0 + x) +=
                        w * r.values[static_cast<std::size_t>(c) * extSize + static_cast<std::size_t>(y) * r.cols + x];
                }
            }
        }
    }
    for (int c = 0; c < channels; ++c) {
        auto plane = sum.plane(c);
        for (std::size_t i = 0; i < plane.size(); ++i) plane[i] /= weight.data()[i];
    }
    return sum;
}

} // namespace bmi::formation
