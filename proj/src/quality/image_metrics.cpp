#include <bmi/quality/image_metrics.hpp>

#include <bmi/common/error.hpp>

#include <cmath>
#include <vector>

namespace bmi::quality {

double psnr(const Image &pred, const Image &gt) {
    if (!pred.sameShape(gt)) throw ValidationError("psnr: shape mismatch");
    if (pred.empty()) throw ValidationError("psnr: empty image");
    double sum = 0.0;
    const auto a = pred.data();
    const auto b = gt.data();
    for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
    const double mse = sum / static_cast<double>(a.size());
    if (mse == 0.0) return kPsnrInfinity;
    return 10.0 * std::log10(1.0 / mse);
}

namespace {

std::vector<double> gaussianWindow(int size, double sigma) {
    std::vector<double> w(static_cast<std::size_t>(size));
    const double c = (size - 1) / 2.0;
    double total = 0.0;
    for (int i = 0; i < size; ++i) {
        w[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
        total += w[i];
    }
    for (double &v : w) v /= total;
    return w;
}

// Separable "valid" filtering: output is (h-n+1) x (w-n+1).
std::vector<double> filterValid(const std::vector<double> &src, int w, int h, const std::vector<double> &k) {
    const int n = static_cast<int>(k.size());
    const int ow = w - n + 1, oh = h - n + 1;
    std::vector<double> rows(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += k[i] * src[static_cast<std::size_t>(y) * w + x + i];
            rows[static_cast<std::size_t>(y) * ow + x] = s;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += k[i] * rows[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    }
    return out;
}

double ssimPlane(std::span<const double> a, std::span<const double> b, int w, int h, const SsimParams &p) {
    const auto k = gaussianWindow(p.window, p.sigma);
    const std::size_t n = a.size();
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end()), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mx = filterValid(x, w, h, k);
    const auto my = filterValid(y, w, h, k);
    const auto sxx = filterValid(xx, w, h, k);
    const auto syy = filterValid(yy, w, h, k);
    const auto sxy = filterValid(xy, w, h, k);

    const double c1 = (p.k1 * p.dynamicRange) * (p.k1 * p.dynamicRange);
    const double c2 = (p.k2 * p.dynamicRange) * (p.k2 * p.dynamicRange);
    double total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = sxx[i] - mx[i] * mx[i];
        const double vy = syy[i] - my[i] * my[i];
        const double cov = sxy[i] - mx[i] * my[i];
        total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
                 ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    return total / static_cast<double>(mx.size());
}

} // namespace

double ssim(const Image &pred, const Image &gt, const SsimParams &params) {
    if (!pred.sameShape(gt)) throw ValidationError("ssim: shape mismatch");
    if (params.window < 1 || params.window % 2 == 0 || !(params.sigma > 0.0)) throw ConfigError("ssim: bad window");
    if (pred.width() < params.window || pred.height() < params.window) {
        throw ValidationError("ssim: image smaller than the window");
    }
    double total = 0.0;
    for (int c = 0; c < pred.channels(); ++c) {
        total += ssimPlane(pred.plane(c), gt.plane(c), pred.width(), pred.height(), params);
    }
    return total / pred.channels();
}

} // namespace bmi::quality
