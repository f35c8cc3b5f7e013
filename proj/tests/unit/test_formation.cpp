#include "oracles.hpp"

#include <bmi/common/error.hpp>
#include <bmi/common/parallel.hpp>
#include <bmi/formation/composite.hpp>
#include <bmi/formation/fft_convolve.hpp>
#include <bmi/formation/psf_sources.hpp>
#include <bmi/optics/raytrace.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace bmi;
using namespace bmi::formation;

namespace {

double maxAbsDiff(const Image &a, const Image &b, int border = 0) {
    double m = 0.0;
    for (int c = 0; c < a.channels(); ++c) {
        for (int y = border; y < a.height() - border; ++y) {
            for (int x = border; x < a.width() - border; ++x) m = std::max(m, std::abs(a.at(c, y, x) - b.at(c, y, x)));
        }
    }
    return m;
}

Image randomImage(std::mt19937_64 &rng, int w, int h, int channels = 1) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image img(w, h, channels);
    for (double &v : img.data()) v = u(rng);
    return img;
}

RenderConfig configFor(int layers, int tileSize) {
    RenderConfig rc;
    rc.tileSize = tileSize;
    rc.depthGrid = {1.0, 1.0 + (layers - 1) * 1.0, 1.0};
    return rc;
}

std::vector<double> depthsFor(int layers) {
    std::vector<double> d;
    for (int k = 0; k < layers; ++k) d.push_back(1.0 + k);
    return d;
}

// A traced on-axis kernel at sensor pitch for realistic tests.
Kernel tracedKernel(double depth) {
    const auto cat = optics::MaterialCatalog::load(oracle::dataDir() / "materials.json");
    const auto lens = optics::loadPrescription(oracle::dataDir() / "lenses/monocentric.json", cat);
    optics::PsfOptions opt;
    opt.pupilSamples = 64;
    const auto g = optics::computePsf(lens, depth, 0.0, optics::kWavelengthGreen, opt);
    return Kernel::fromPsf(psfmap::resizePsf(g, 2.0));
}

} // namespace

TEST(FftConvolve, MatchesDirectConvolutionOnRandomInputs) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> dim(4, 40), side(1, 9);
    for (int trial = 0; trial < 40; ++trial) {
        const int ks = side(rng);
        const Kernel k = oracle::randomKernel(rng, ks);
        const int pad = k.radius() + trial % 3;
        const int w = dim(rng) + 2 * pad, h = dim(rng) + 2 * pad;
        const Image tile = randomImage(rng, w, h);
        const Image fast = fftConvolve(tile, k, pad);
        const Image full = oracle::directConvolve(tile, k);
        ASSERT_EQ(fast.width(), w - 2 * pad);
        for (int y = 0; y < fast.height(); ++y) {
            for (int x = 0; x < fast.width(); ++x) ASSERT_NEAR(fast(y, x), full(y + pad, x + pad), 1e-12);
        }
    }
}

TEST(FftConvolve, RejectsInsufficientPadding) {
    std::mt19937_64 rng(1);
    const Kernel k = oracle::randomKernel(rng, 7);
    EXPECT_THROW(fftConvolve(Image(20, 20), k, 2), ConfigError);
    EXPECT_THROW(fftConvolve(Image(5, 5), oracle::randomKernel(rng, 9), 4), ConfigError);
}

TEST(Layerize, ProducesDisjointFullCoverage) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(0.3, 14.0);
    const Image rgb = randomImage(rng, 30, 20, 3);
    Image depth(30, 20);
    for (double &v : depth.data()) v = d(rng);
    const RenderConfig rc;
    const DepthLayerStack s = layerize(rgb, depth, rc);
    EXPECT_EQ(s.layerCount(), 94);
    Image coverage(30, 20);
    for (int k = 0; k < s.layerCount(); ++k) {
        const Image m = s.layerMask(k);
        for (std::size_t i = 0; i < m.size(); ++i) coverage.data()[i] += m.data()[i];
    }
    for (double v : coverage.data()) ASSERT_EQ(v, 1.0);
    for (int y = 0; y < 20; ++y) {
        for (int x = 0; x < 30; ++x) ASSERT_EQ(s.label(y, x), quantizeDepth(depth(y, x), rc.depthGrid));
    }

    depth(3, 4) = 0.0;
    EXPECT_THROW(layerize(rgb, depth, rc), ValidationError);
    depth(3, 4) = std::nan("");
    EXPECT_THROW(layerize(rgb, depth, rc), ValidationError);
}

TEST(Layerize, QuantisationRule) {
    const psfmap::DepthGrid g;
    EXPECT_EQ(quantizeDepth(0.749, g), 0);
    EXPECT_EQ(quantizeDepth(0.75, g), 1);
    EXPECT_EQ(quantizeDepth(0.2, g), 0);
    EXPECT_EQ(quantizeDepth(50.0, g), 93);
}

TEST(LayerStack, FromLayersValidatesMasks) {
    Image m0(4, 4), m1(4, 4), i0(4, 4, 3), i1(4, 4, 3);
    m0(0, 0) = 1.0;
    m1(0, 0) = 1.0;
    EXPECT_THROW(DepthLayerStack::fromLayers({i0, i1}, {m0, m1}, {1.0, 2.0}), ValidationError);
    m1(0, 0) = 0.0;
    m1(1, 1) = 0.5;
    EXPECT_THROW(DepthLayerStack::fromLayers({i0, i1}, {m0, m1}, {1.0, 2.0}), ValidationError);
    m1(1, 1) = 1.0;
    i0.at(0, 2, 2) = 0.3; // outside its mask
    EXPECT_THROW(DepthLayerStack::fromLayers({i0, i1}, {m0, m1}, {1.0, 2.0}), ValidationError);
    i0.at(0, 2, 2) = 0.0;
    i0.at(1, 0, 0) = 0.7;
    const auto s = DepthLayerStack::fromLayers({i0, i1}, {m0, m1}, {1.0, 2.0});
    EXPECT_EQ(s.label(0, 0), 0);
    EXPECT_EQ(s.label(1, 1), 1);
    EXPECT_EQ(s.label(3, 3), DepthLayerStack::kNoLayer);
    EXPECT_EQ(s.layerImage(0).at(1, 0, 0), 0.7);
}

TEST(Composite, DeltaKernelsReproduceTheContent) {
    std::mt19937_64 rng(5);
    const auto st = oracle::randomFullCoverageStack(rng, 50, 37, 4, 3, false);
    const auto stack = DepthLayerStack::fromLayers(st.images, st.masks, depthsFor(4));
    const UniformPsfProvider psfs(Kernel::delta(), 3, 4);
    const Image out = compositeOcclusion(stack, psfs, configFor(4, 16));
    EXPECT_LT(maxAbsDiff(out, stack.content()), 1e-12);
}

TEST(Composite, TelescopesToOneOnFullCoverage) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 8; ++trial) {
        const int layers = 2 + trial % 5;
        const auto st = oracle::randomFullCoverageStack(rng, 40, 40, layers, 1, true);
        const int side = 3 + 2 * (trial % 3);
        std::vector<std::vector<Kernel>> kernels(1);
        for (int k = 0; k < layers; ++k) kernels[0].push_back(oracle::randomKernel(rng, side));
        const auto stack = DepthLayerStack::fromLayers(st.images, st.masks, depthsFor(layers));
        const Image out = compositeOcclusion(stack, UniformPsfProvider(kernels), configFor(layers, 16));
        for (double v : out.data()) ASSERT_NEAR(v, 1.0, 1e-9);
    }
}

TEST(Composite, MatchesPerPixelOracle) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 4; ++trial) {
        const int layers = 2 + trial % 2;
        const auto st = oracle::randomFullCoverageStack(rng, 24, 21, layers, 2, false);
        std::vector<std::vector<Kernel>> kernels(2);
        for (int c = 0; c < 2; ++c) {
            for (int k = 0; k < layers; ++k) kernels[c].push_back(oracle::randomKernel(rng, 3 + 2 * ((c + k) % 2)));
        }
        const auto stack = DepthLayerStack::fromLayers(st.images, st.masks, depthsFor(layers));
        const Image fast = compositeOcclusion(stack, UniformPsfProvider(kernels), configFor(layers, 8));
        const Image slow = oracle::bruteForceComposite(st.images, st.masks, kernels, kOcclusionEpsilon);
        EXPECT_LT(maxAbsDiff(fast, slow), 1e-9) << "trial " << trial;
    }
}

TEST(Composite, StarvedLayersContributeNothing) {
    // Near layer only: the far layer is empty, so pixels far from the near
    // layer see no support at all and stay black.
    Image m0(30, 30), m1(30, 30), i0(30, 30), i1(30, 30);
    for (int y = 10; y < 20; ++y) {
        for (int x = 10; x < 20; ++x) {
            m1(y, x) = 1.0;
            i1(y, x) = 0.5;
        }
    }
    const auto stack = DepthLayerStack::fromLayers({i0, i1}, {m0, m1}, {1.0, 2.0});
    std::mt19937_64 rng(2);
    const Image out = compositeOcclusion(stack, UniformPsfProvider(oracle::randomKernel(rng, 5), 1, 2), configFor(2, 10));
    EXPECT_EQ(out(0, 0), 0.0);
    EXPECT_NEAR(out(15, 15), 0.5, 1e-12);
    for (double v : out.data()) ASSERT_TRUE(std::isfinite(v));
}

TEST(Composite, TilingIsTransparentForUniformKernels) {
    const Kernel k = tracedKernel(0.8);
    std::mt19937_64 rng(4);
    const Image rgb = randomImage(rng, 120, 90, 3);
    const Image depth(120, 90, 1, 2.0);
    RenderConfig tiled;
    RenderConfig global = tiled;
    global.tileSize = 200;
    const UniformPsfProvider psfs(k, 3, tiled.depthGrid.count());
    const auto stack = layerize(rgb, depth, tiled);
    const Image a = compositeOcclusion(stack, psfs, tiled);
    const Image b = compositeOcclusion(stack, psfs, global);
    EXPECT_LT(maxAbsDiff(a, b, k.radius()), 1e-10);
}

TEST(Composite, ForegroundNeverIncreasesTheBackgroundContribution) {
    std::mt19937_64 rng(8);
    const Kernel k = oracle::randomKernel(rng, 7);
    Image previous;
    for (int radius : {0, 4, 7, 11}) {
        Image m0(40, 40), m1(40, 40), i1(40, 40);
        for (int y = 0; y < 40; ++y) {
            for (int x = 0; x < 40; ++x) {
                const bool fg = (x - 20) * (x - 20) + (y - 20) * (y - 20) < radius * radius;
                (fg ? m1 : m0)(y, x) = 1.0;
            }
        }
        // Only the background carries light, so the output is its contribution.
        const auto stack = DepthLayerStack::fromLayers({m0, i1}, {m0, m1}, {1.0, 2.0});
        const Image out = compositeOcclusion(stack, UniformPsfProvider(k, 1, 2), configFor(2, 16));
        if (!previous.empty()) {
            for (std::size_t i = 0; i < out.size(); ++i) ASSERT_LE(out.data()[i], previous.data()[i] + 1e-12);
        }
        previous = out;
    }
}

TEST(Composite, ResultDoesNotDependOnThreadCount) {
    std::mt19937_64 rng(12);
    const auto st = oracle::randomFullCoverageStack(rng, 90, 70, 5, 3, false);
    const auto stack = DepthLayerStack::fromLayers(st.images, st.masks, depthsFor(5));
    const UniformPsfProvider psfs(oracle::randomKernel(rng, 9), 3, 5);
    setThreadCount(1);
    const Image a = compositeOcclusion(stack, psfs, configFor(5, 20));
    setThreadCount(4);
    const Image b = compositeOcclusion(stack, psfs, configFor(5, 20));
    setThreadCount(0);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a.data()[i], b.data()[i]);
}

TEST(Composite, RejectsMismatchedProvider) {
    std::mt19937_64 rng(1);
    const auto st = oracle::randomFullCoverageStack(rng, 10, 10, 2, 1, false);
    const auto stack = DepthLayerStack::fromLayers(st.images, st.masks, depthsFor(2));
    EXPECT_THROW(compositeOcclusion(stack, UniformPsfProvider(Kernel::delta(), 1, 3), configFor(2, 8)),
                 ValidationError);
}

TEST(Patchwise, AgreesWithOcclusionOnConstantDepth) {
    const Kernel k = tracedKernel(1.0);
    std::mt19937_64 rng(6);
    const Image rgb = randomImage(rng, 96, 64, 3);
    const Image depth(96, 64, 1, 3.0);
    const RenderConfig rc;
    const UniformPsfProvider psfs(k, 3, rc.depthGrid.count());
    const Image occ = compositeOcclusion(layerize(rgb, depth, rc), psfs, rc);
    const Image pw = renderPatchwise(rgb, depth, psfs, rc);
    EXPECT_LT(maxAbsDiff(occ, pw, k.radius()), 1e-3);
    // Patch-wise overlap-add with one kernel is exactly a global convolution.
    const Image direct = oracle::directConvolve(rgb.channel(1), k);
    EXPECT_LT(maxAbsDiff(pw.channel(1), direct), 1e-10);
}

TEST(Patchwise, UsesTheUpperMedianDepthOfEachPatch) {
    // Layer 0 kernel keeps energy in place, layer 1 shifts it one pixel right.
    std::vector<double> shift(9, 0.0);
    shift[1 * 3 + 2] = 1.0;
    std::vector<double> stay(9, 0.0);
    stay[4] = 1.0;
    const UniformPsfProvider psfs({{Kernel(3, stay), Kernel(3, shift)}});
    RenderConfig rc = configFor(2, 40);
    rc.patchSize = 4;

    Image rgb(4, 4), depth(4, 4);
    rgb(1, 1) = 1.0;
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) depth(y, x) = y < 2 ? 1.0 : 2.0; // 8 near, 8 far
    }
    const Image out = renderPatchwise(rgb, depth, psfs, rc);
    EXPECT_DOUBLE_EQ(out(1, 2), 1.0); // far kernel chosen for an even split

    for (int x = 0; x < 4; ++x) depth(2, x) = 1.0; // 12 near, 4 far
    EXPECT_DOUBLE_EQ(renderPatchwise(rgb, depth, psfs, rc)(1, 1), 1.0);
}

TEST(Noise, CounterBasedAndStatisticallySound) {
    const Image base(200, 150, 3, 0.5);
    const Image a = addGaussianNoise(base, 0.01, 42);
    const Image b = addGaussianNoise(base, 0.01, 42);
    const Image c = addGaussianNoise(base, 0.01, 43);
    ASSERT_EQ(a.size(), b.size());
    double mean = 0.0, sq = 0.0;
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ASSERT_EQ(a.data()[i], b.data()[i]);
        differs |= a.data()[i] != c.data()[i];
        const double n = a.data()[i] - 0.5;
        mean += n;
        sq += n * n;
    }
    mean /= static_cast<double>(a.size());
    const double sd = std::sqrt(sq / static_cast<double>(a.size()) - mean * mean);
    EXPECT_TRUE(differs);
    EXPECT_NEAR(mean, 0.0, 5e-4);
    EXPECT_NEAR(sd, 0.01, 2e-4);

    const Image zero = addGaussianNoise(base, 0.0, 42);
    for (std::size_t i = 0; i < zero.size(); ++i) ASSERT_EQ(zero.data()[i], 0.5);
    EXPECT_THROW(addGaussianNoise(base, -1.0, 0), ValidationError);
}
