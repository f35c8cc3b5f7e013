#pragma once

#include <bmi/quality/artifact_score.hpp>
#include <bmi/quality/depth_metrics.hpp>
#include <bmi/quality/losses.hpp>

#include <nlohmann/json.hpp>

#include <optional>
#include <string>

namespace bmi::quality {

struct MetricsReport {
    std::optional<DepthMetrics> depth;
    std::optional<double> psnr;
    std::optional<double> ssim;
    std::optional<double> artifactScore;
    ArtifactParams artifactParams;
    LossWeights lossWeights;
};

/// PSNR infinity is written as the string "inf"; parameters are echoed.
nlohmann::json toJson(const MetricsReport &report);

/// JSON number, or "inf"/"-inf"/"nan" for non-finite values.
nlohmann::json jsonNumber(double value);

} // namespace bmi::quality
