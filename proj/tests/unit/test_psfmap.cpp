#include "oracles.hpp"

#include <bmi/common/error.hpp>
#include <bmi/optics/raytrace.hpp>
#include <bmi/psfmap/psf_cache.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

using namespace bmi;
using namespace bmi::psfmap;

namespace {

optics::PsfGrid impulse(int side, int row, int col) {
    optics::PsfGrid g(side, optics::kPsfPitchUm);
    g.at(row, col) = 1.0;
    return g;
}

const PsfTensor &smallTracedTensor() {
    static const PsfTensor tensor = [] {
        const auto cat = optics::MaterialCatalog::load(oracle::dataDir() / "materials.json");
        const auto lens = optics::loadPrescription(oracle::dataDir() / "lenses/monocentric.json", cat);
        optics::PsfOptions opt;
        opt.pupilSamples = 48;
        return buildPsfTensor(lens, {0.0, 3.0, 6.0}, {1.0, 5.0}, opt);
    }();
    return tensor;
}

std::string slurp(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST(DepthGrid, DefaultGridHas94Layers) {
    const DepthGrid g;
    EXPECT_EQ(g.count(), 94);
    const auto v = g.values();
    EXPECT_DOUBLE_EQ(v.front(), 0.7);
    EXPECT_NEAR(v.back(), 10.0, 1e-12);
}

TEST(DepthGrid, NearestIndexRoundsHalfTowardsFar) {
    const DepthGrid g;
    EXPECT_EQ(g.nearestIndex(0.7), 0);
    EXPECT_EQ(g.nearestIndex(0.74), 0);
    EXPECT_EQ(g.nearestIndex(0.75), 1);
    EXPECT_EQ(g.nearestIndex(0.1), 0);
    EXPECT_EQ(g.nearestIndex(25.0), 93);
    EXPECT_EQ(g.nearestIndex(2.0), 13);
    EXPECT_THROW((DepthGrid{1.0, 0.5, 0.1}.count()), ConfigError);
}

TEST(FieldInterpolation, WeightsAreInverseSquareOverTheBracket) {
    const auto theta = defaultThetaSamples();
    ASSERT_EQ(theta.size(), 13u);

    auto w = interpWeights(1.0, theta);
    EXPECT_DOUBLE_EQ(w[2], 1.0);
    EXPECT_DOUBLE_EQ(std::accumulate(w.begin(), w.end(), 0.0), 1.0);

    w = interpWeights(1.25, theta);
    EXPECT_DOUBLE_EQ(w[2], 0.5);
    EXPECT_DOUBLE_EQ(w[3], 0.5);

    const double q = 2.1; // between 2.0 and 2.5
    w = interpWeights(q, theta);
    const double il = 1.0 / ((q - 2.0) * (q - 2.0)), ih = 1.0 / ((2.5 - q) * (2.5 - q));
    EXPECT_NEAR(w[4], il / (il + ih), 1e-12);
    EXPECT_NEAR(w[5], ih / (il + ih), 1e-12);
    EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-15);

    EXPECT_THROW(interpWeights(6.5, theta), OutOfRangeError);
    EXPECT_THROW(interpWeights(-0.1, theta), OutOfRangeError);
}

TEST(Rotation, QuarterTurnsPermuteSamplesExactly) {
    const auto g = impulse(128, 64, 80); // +x of the centre
    const auto r = rotatePsf(g, 90.0);
    // Rotation about the grid's geometric centre maps +x to +y.
    EXPECT_DOUBLE_EQ(r.at(80, 63), 1.0);
    EXPECT_DOUBLE_EQ(r.sum(), 1.0);

    auto back = g;
    for (int i = 0; i < 4; ++i) back = rotatePsf(back, 90.0);
    EXPECT_EQ(back.samples, g.samples);
    EXPECT_EQ(rotatePsf(g, 0.0).samples, g.samples);
    EXPECT_EQ(rotatePsf(g, -90.0).samples, rotatePsf(g, 270.0).samples);
}

TEST(Rotation, ArbitraryAnglesConserveEnergyAndTurnTheCentroid) {
    const auto &t = smallTracedTensor();
    const optics::PsfGrid g = t.grid(1, 2, 0); // 6 deg, 1 m
    const auto s0 = optics::psfStats(g);
    for (double phi : {17.0, 45.0, 133.0, -71.0}) {
        const auto r = rotatePsf(g, phi);
        EXPECT_NEAR(r.sum(), 1.0, 1e-12);
        const auto s = optics::psfStats(r);
        const double a = phi * M_PI / 180.0;
        EXPECT_NEAR(s.centroidX, s0.centroidX * std::cos(a) - s0.centroidY * std::sin(a), 0.05);
        EXPECT_NEAR(s.centroidY, s0.centroidX * std::sin(a) + s0.centroidY * std::cos(a), 0.05);
    }
}

TEST(Resize, BoxSumsIntoSensorPixels) {
    EXPECT_EQ(resizedSide(128, 0.4, 2.0), 26);
    const auto g = impulse(128, 64, 64);
    const auto r = resizePsf(g, 2.0, false);
    EXPECT_EQ(r.side, 26);
    EXPECT_DOUBLE_EQ(r.pitchUm, 2.0);
    // One pixel of padding on each side: fine index 64 -> coarse (64 + 1) / 5.
    EXPECT_DOUBLE_EQ(r.at(13, 13), 1.0);

    const auto &t = smallTracedTensor();
    const auto coarse = resizePsf(t.grid(0, 1, 1), 2.0, false);
    EXPECT_NEAR(coarse.sum(), t.grid(0, 1, 1).sum(), 1e-12);
    EXPECT_THROW(resizePsf(g, 1.5), ConfigError);
    EXPECT_THROW(resizePsf(g, 0.2), ConfigError);
}

TEST(PixelField, LinearRadialMapping) {
    const SensorGeometry s;
    EXPECT_DOUBLE_EQ(pixelField(s, 240, 320).theta, 0.0);
    EXPECT_NEAR(pixelField(s, 0, 0).theta, 6.0, 1e-12);
    EXPECT_NEAR(pixelField(s, 240, 520).theta, 3.0, 1e-12);
    EXPECT_NEAR(pixelField(s, 240, 520).phi, 0.0, 1e-12);
    EXPECT_NEAR(pixelField(s, 340, 320).phi, 90.0, 1e-12);
    EXPECT_NEAR(std::abs(pixelField(s, 240, 100).phi), 180.0, 1e-12);
}

TEST(PsfMap, PsfAtComposesInterpolationRotationAndResize) {
    const auto &t = smallTracedTensor();
    const SensorGeometry s{80, 60, 2.0, 6.0};
    const auto p = psfAt(t, s, 1, 30, 40, 1.2);
    EXPECT_EQ(p.side, 26);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    // Centre pixel: theta = 0, no rotation, so this is the resized on-axis PSF.
    const auto direct = resizePsf(t.grid(1, 0, 0), 2.0);
    for (std::size_t i = 0; i < p.samples.size(); ++i) ASSERT_NEAR(p.samples[i], direct.samples[i], 1e-14);
    EXPECT_THROW(psfAt(t, s, 1, 60, 40, 1.0), OutOfRangeError);

    const PsfTensor delta = deltaPsfTensor({0.0, 6.0}, {1.0, 2.0});
    const auto d = psfAt(delta, s, 0, 30, 70, 1.0); // phi = 0
    EXPECT_DOUBLE_EQ(d.at(13, 13), 1.0);
}

TEST(PsfTensor, SaveLoadRoundTrip) {
    const auto dir = oracle::scratchDir("tensor_roundtrip");
    const auto &t = smallTracedTensor();
    ASSERT_TRUE(t.complete());
    t.save(dir / "t.bin");
    const PsfTensor back = PsfTensor::load(dir / "t.bin");
    EXPECT_EQ(back.thetaSamples(), t.thetaSamples());
    EXPECT_EQ(back.depthSamples(), t.depthSamples());
    for (int c = 0; c < 3; ++c) {
        for (int th = 0; th < 3; ++th) {
            for (int d = 0; d < 2; ++d) {
                EXPECT_EQ(back.grid(c, th, d).samples, t.grid(c, th, d).samples);
                EXPECT_EQ(back.grid(c, th, d).capturedEnergyFraction, t.grid(c, th, d).capturedEnergyFraction);
            }
        }
    }
    EXPECT_EQ(t.nearestDepthIndex(2.9), 0);
    EXPECT_EQ(t.nearestDepthIndex(3.1), 1);
}

TEST(PsfCache, DefaultLayoutRecordCount) {
    const TileGrid tiles{640, 480, 40};
    EXPECT_EQ(tiles.rows(), 12);
    EXPECT_EQ(tiles.cols(), 16);
    CacheHeader h{3, 94, tiles.rows(), tiles.cols(), 26, 2000};
    EXPECT_EQ(h.recordCount(), 94u * 3u * 16u * 12u);
}

TEST(PsfCache, BuildIsDeterministicAndRoundTrips) {
    const auto dir = oracle::scratchDir("cache_roundtrip");
    const auto &t = smallTracedTensor();
    const SensorGeometry s{80, 60, 2.0, 6.0};
    buildPsfMapCache(t, s, 40, dir / "a.bin");
    buildPsfMapCache(t, s, 40, dir / "b.bin");
    const std::string a = slurp(dir / "a.bin");
    EXPECT_EQ(a, slurp(dir / "b.bin"));
    EXPECT_EQ(a.substr(0, 8), std::string("BMIPSF1\0", 8));
    EXPECT_EQ(a.size(), 8u + 6u * 4u + 3u * 2u * 2u * 2u * 26u * 26u * 4u);

    const PsfCache c = PsfCache::load(dir / "a.bin");
    EXPECT_EQ(c.header().channels, 3);
    EXPECT_EQ(c.header().depths, 2);
    EXPECT_EQ(c.header().tileRows, 2);
    EXPECT_EQ(c.header().tileCols, 2);
    EXPECT_EQ(c.header().psfSide, 26);
    EXPECT_EQ(c.header().pitchNm, 2000);

    // Record (channel 2, depth 1, tile 1,0) is psfAt at that tile centre.
    const TileGrid tiles{80, 60, 40};
    const auto expected = psfAtIndex(t, s, 2, tiles.centerY(1), tiles.centerX(0), 1);
    const auto rec = c.record(2, 1, 1, 0);
    for (std::size_t i = 0; i < rec.size(); ++i) ASSERT_FLOAT_EQ(rec[i], static_cast<float>(expected.samples[i]));
    EXPECT_THROW(c.record(3, 0, 0, 0), OutOfRangeError);

    {
        std::ofstream bad(dir / "bad.bin", std::ios::binary);
        bad << "NOTACACHE";
    }
    EXPECT_THROW(PsfCache::load(dir / "bad.bin"), ParseError);
    EXPECT_THROW(PsfCache::load(dir / "missing.bin"), IoError);
}
