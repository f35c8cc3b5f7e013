#include <bmi/quality/losses.hpp>

#include <bmi/common/error.hpp>
#include <bmi/common/fft.hpp>

#include <cmath>

namespace bmi::quality {

void LossWeights::validate() const {
    if (!(content >= 0.0) || !(msfr >= 0.0) || !(silog >= 0.0) || !(silogLambda >= 0.0)) {
        throw ConfigError("loss weights must be non-negative");
    }
}

std::vector<Image> imagePyramid(const Image &image, int levels) {
    if (levels < 1) throw ConfigError("pyramid needs at least one level");
    std::vector<Image> out{image};
    for (int l = 1; l < levels; ++l) {
        const Image &prev = out.back();
        const int w = prev.width() / 2, h = prev.height() / 2;
        if (w < 1 || h < 1) throw ValidationError("image too small for the requested pyramid");
        Image next(w, h, prev.channels());
        for (int c = 0; c < prev.channels(); ++c) {
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    next.at(c, y, x) = 0.25 * (prev.at(c, 2 * y, 2 * x) + prev.at(c, 2 * y, 2 * x + 1) +
                                               prev.at(c, 2 * y + 1, 2 * x) + prev.at(c, 2 * y + 1, 2 * x + 1));
                }
            }
        }
        out.push_back(std::move(next));
    }
    return out;
}

namespace {

void checkScales(const std::vector<Image> &pred, const std::vector<Image> &gt) {
    if (pred.size() != gt.size() || pred.empty()) throw ValidationError("scale lists differ in length or are empty");
    for (std::size_t k = 0; k < pred.size(); ++k) {
        if (!pred[k].sameShape(gt[k]) || pred[k].empty()) throw ValidationError("scale shapes differ");
    }
}

} // namespace

double contentLoss(const std::vector<Image> &pred, const std::vector<Image> &gt) {
    checkScales(pred, gt);
    double total = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const auto a = pred[k].data(), b = gt[k].data();
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
        total += s / static_cast<double>(a.size());
    }
    return total;
}

double msfrLoss(const std::vector<Image> &pred, const std::vector<Image> &gt) {
    checkScales(pred, gt);
    double total = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const int w = pred[k].width(), h = pred[k].height();
        const std::size_t n = pred[k].planeSize();
        fft::ComplexBuffer in(n), out(n);
        double s = 0.0;
        for (int c = 0; c < pred[k].channels(); ++c) {
            const auto a = pred[k].plane(c), b = gt[k].plane(c);
            for (std::size_t i = 0; i < n; ++i) in[i] = {a[i] - b[i], 0.0};
            fft::forwardComplex(h, w, in, out);
            for (std::size_t i = 0; i < n; ++i) s += std::abs(out[i].real()) + std::abs(out[i].imag());
        }
        total += s / static_cast<double>(pred[k].size());
    }
    return total;
}

double silogLoss(const Image &predDepth, const Image &gtDepth, double lambda, SilogForm form) {
    if (!predDepth.sameShape(gtDepth)) throw ValidationError("silog: shape mismatch");
    const auto p = predDepth.data(), g = gtDepth.data();
    double sum = 0.0, sumSq = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g[i] == 0.0) continue; // invalid ground truth
        if (!(g[i] > 0.0) || !(p[i] > 0.0)) throw ValidationError("silog: non-positive depth");
        const double d = std::log(g[i]) - std::log(p[i]);
        sum += d;
        sumSq += d * d;
        ++n;
    }
    if (n == 0) throw ValidationError("silog: no valid pixels");
    const double nn = static_cast<double>(n);
    if (form == SilogForm::Printed) return sum / nn - lambda * sumSq / (nn * nn);
    return sumSq / nn - lambda * (sum / nn) * (sum / nn);
}

double totalLoss(const LossComponents &c, const LossWeights &w) {
    w.validate();
    return w.content * c.content + w.msfr * c.msfr + w.silog * c.silog;
}

LossComponents lossComponents(const std::vector<Image> &predImage, const std::vector<Image> &gtImage,
                              const Image &predDepth, const Image &gtDepth, const LossWeights &weights) {
    return {contentLoss(predImage, gtImage), msfrLoss(predImage, gtImage),
            silogLoss(predDepth, gtDepth, weights.silogLambda)};
}

} // namespace bmi::quality
