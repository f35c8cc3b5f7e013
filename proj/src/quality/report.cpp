#include <bmi/quality/report.hpp>

#include <cmath>

namespace bmi::quality {

nlohmann::json jsonNumber(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    return value;
}

nlohmann::json toJson(const MetricsReport &report) {
    nlohmann::json j = nlohmann::json::object();
    if (report.depth) {
        const DepthMetrics &d = *report.depth;
        j["delta1"] = d.delta1;
        j["delta2"] = d.delta2;
        j["delta3"] = d.delta3;
        j["abs_rel"] = d.absRel;
        j["rmse"] = d.rmse;
        j["valid_pixel_count"] = d.validPixelCount;
    }
    if (report.psnr) j["psnr"] = jsonNumber(*report.psnr);
    if (report.ssim) j["ssim"] = *report.ssim;
    if (report.artifactScore) {
        j["artifact_score"] = *report.artifactScore;
        const ArtifactParams &p = report.artifactParams;
        j["artifact_params"] = {{"canny_low", p.cannyLow},
                                {"canny_high", p.cannyHigh},
                                {"gaussian_sigma", p.gaussianSigma},
                                {"dilation_radius", p.dilationRadius},
                                {"dilation_iterations", p.dilationIterations}};
    }
    const LossWeights &w = report.lossWeights;
    j["loss_weights"] = {{"gamma_cont", w.content}, {"gamma_msfr", w.msfr}, {"gamma_silog", w.silog},
                         {"silog_lambda", w.silogLambda}};
    return j;
}

} // namespace bmi::quality
