#pragma once

#include <bmi/common/image.hpp>

#include <cstddef>

namespace bmi::quality {

struct DepthMetrics {
    double delta1 = 0.0;
    double delta2 = 0.0;
    double delta3 = 0.0;
    double absRel = 0.0;
    double rmse = 0.0;
    std::size_t validPixelCount = 0;
};

/// Standard monocular-depth error metrics over the pixels where `validMask`
/// is non-zero. With an empty mask image, pixels with gt > 0 are valid.
DepthMetrics depthMetrics(const Image &pred, const Image &gt, const Image &validMask = {});

} // namespace bmi::quality
