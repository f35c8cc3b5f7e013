#pragma once

#include <bmi/common/image.hpp>

#include <vector>

namespace bmi::quality {

struct LossWeights {
    double content = 1.0;
    double msfr = 0.1;
    double silog = 0.1;
    double silogLambda = 1.0;

    void validate() const;
};

enum class SilogForm {
    Standard, // mean(g^2) - lambda * mean(g)^2
    Printed,  // mean(g) - lambda * sum(g^2) / N^2, the variant with the squares transposed
};

/// Full, half and quarter resolution copies built by 2x2 box averaging.
std::vector<Image> imagePyramid(const Image &image, int levels = 3);

double contentLoss(const std::vector<Image> &pred, const std::vector<Image> &gt);

/// L1 over real and imaginary parts of the unnormalised 2-D DFT of the
/// difference, per channel, divided by the element count of each scale.
double msfrLoss(const std::vector<Image> &pred, const std::vector<Image> &gt);

/// g_i = log gt_i - log pred_i over pixels with gt > 0.
double silogLoss(const Image &predDepth, const Image &gtDepth, double lambda = 1.0,
                 SilogForm form = SilogForm::Standard);

struct LossComponents {
    double content = 0.0;
    double msfr = 0.0;
    double silog = 0.0;
};

double totalLoss(const LossComponents &components, const LossWeights &weights = {});

LossComponents lossComponents(const std::vector<Image> &predImage, const std::vector<Image> &gtImage,
                              const Image &predDepth, const Image &gtDepth, const LossWeights &weights = {});

} // namespace bmi::quality
