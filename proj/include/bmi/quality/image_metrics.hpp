#pragma once

#include <bmi/common/image.hpp>

#include <limits>

namespace bmi::quality {

/// Returned by psnr() for identical inputs.
inline constexpr double kPsnrInfinity = std::numeric_limits<double>::infinity();

/// Peak 1.0, MSE over every sample of every channel.
double psnr(const Image &pred, const Image &gt);

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamicRange = 1.0;
};

/// Gaussian-windowed SSIM averaged over all fully-inside windows; multi-channel
/// inputs give the mean of the per-channel scores.
double ssim(const Image &pred, const Image &gt, const SsimParams &params = {});

} // namespace bmi::quality
