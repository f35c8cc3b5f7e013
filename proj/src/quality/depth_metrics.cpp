#include <bmi/quality/depth_metrics.hpp>

#include <bmi/common/error.hpp>

#include <algorithm>
#include <cmath>

namespace bmi::quality {

DepthMetrics depthMetrics(const Image &pred, const Image &gt, const Image &validMask) {
    if (!pred.sameShape(gt) || pred.channels() != 1) throw ValidationError("depth maps must be single-channel and equal in size");
    const bool explicitMask = !validMask.empty();
    if (explicitMask && (validMask.width() != gt.width() || validMask.height() != gt.height())) {
        throw ValidationError("valid mask size differs from depth map");
    }

    const auto p = pred.data();
    const auto g = gt.data();
    std::size_t n = 0, d1 = 0, d2 = 0, d3 = 0;
    double absRel = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const bool valid = explicitMask ? validMask.data()[i] != 0.0 : g[i] > 0.0;
        if (!valid) continue;
        if (!(p[i] > 0.0) || !(g[i] > 0.0)) throw ValidationError("depths must be positive on valid pixels");
        const double ratio = std::max(p[i] / g[i], g[i] / p[i]);
        d1 += ratio < 1.25;
        d2 += ratio < 1.25 * 1.25;
        d3 += ratio < 1.25 * 1.25 * 1.25;
        absRel += std::abs(p[i] - g[i]) / g[i];
        sq += (p[i] - g[i]) * (p[i] - g[i]);
        ++n;
    }
    if (n == 0) throw ValidationError("empty valid mask");

    const double inv = 1.0 / static_cast<double>(n);
    return {d1 * inv, d2 * inv, d3 * inv, absRel * inv, std::sqrt(sq * inv), n};
}

} // namespace bmi::quality
