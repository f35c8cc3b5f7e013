#pragma once

#include <bmi/common/image.hpp>

#include <cstdint>
#include <vector>

namespace bmi::quality {

struct ArtifactParams {
    double cannyLow = 0.1;
    double cannyHigh = 0.2;
    double gaussianSigma = 1.4;
    int dilationRadius = 2; // 5x5 square element
    int dilationIterations = 2;

    void validate() const;
};

struct SmoothMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> mask; // 1 = smooth
    ArtifactParams params;

    std::uint8_t at(int y, int x) const { return mask[static_cast<std::size_t>(y) * width + x]; }
    std::size_t count() const;
};

struct ArtifactResult {
    double score = 0.0;
    SmoothMask mask;
};

/// Rec. 601 luma of an RGB image; single-channel input is returned unchanged.
Image luma(const Image &image);

/// Binary Canny edge map (1 = edge) of a grayscale image in [0, 1].
std::vector<std::uint8_t> cannyEdges(const Image &gray, double sigma, double low, double high);

/// Complement of the dilated Canny edge map of `reference`. The one-pixel
/// image border is always excluded because the Laplacian is undefined there.
SmoothMask smoothMask(const Image &reference, const ArtifactParams &params = {});

/// |4-neighbour Laplacian| of a grayscale image; border pixels are zero.
Image absLaplacian(const Image &gray);

ArtifactResult artifactScore(const Image &simulated, const Image &reference, const ArtifactParams &params = {});

} // namespace bmi::quality
