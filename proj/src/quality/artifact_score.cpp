#include <bmi/quality/artifact_score.hpp>

#include <bmi/common/error.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bmi::quality {

void ArtifactParams::validate() const {
    if (!(gaussianSigma > 0.0)) throw ConfigError("canny sigma must be positive");
    if (!(cannyLow >= 0.0) || !(cannyHigh >= cannyLow)) throw ConfigError("canny thresholds must satisfy 0 <= low <= high");
    if (dilationRadius < 0 || dilationIterations < 0) throw ConfigError("dilation parameters must be non-negative");
}

std::size_t SmoothMask::count() const { return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1)); }

Image luma(const Image &image) {
    if (image.channels() == 1) return image;
    if (image.channels() != 3) throw ValidationError("expected a 1- or 3-channel image");
    Image out(image.width(), image.height(), 1);
    const auto r = image.plane(0), g = image.plane(1), b = image.plane(2);
    auto o = out.plane(0);
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
    return out;
}

namespace {

int clampi(int v, int lo, int hi) { return std::min(std::max(v, lo), hi); }

Image gaussianBlur(const Image &src, double sigma) {
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
    for (int i = -r; i <= r; ++i) k[i + r] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    const double total = std::accumulate(k.begin(), k.end(), 0.0);
    for (double &v : k) v /= total;

    const int w = src.width(), h = src.height();
    Image tmp(w, h), out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = -r; i <= r; ++i) s += k[i + r] * src(y, clampi(x + i, 0, w - 1));
            tmp(y, x) = s;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = -r; i <= r; ++i) s += k[i + r] * tmp(clampi(y + i, 0, h - 1), x);
            out(y, x) = s;
        }
    }
    return out;
}

} // namespace

std::vector<std::uint8_t> cannyEdges(const Image &gray, double sigma, double low, double high) {
    if (gray.channels() != 1) throw ValidationError("canny expects a grayscale image");
    const int w = gray.width(), h = gray.height();
    const Image g = gaussianBlur(gray, sigma);
    auto px = [&](int y, int x) { return g(clampi(y, 0, h - 1), clampi(x, 0, w - 1)); };

    // Sobel scaled by 1/4 so a unit step has unit gradient.
    Image gx(w, h), gy(w, h), mag(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double dx = (px(y - 1, x + 1) + 2.0 * px(y, x + 1) + px(y + 1, x + 1)) -
                              (px(y - 1, x - 1) + 2.0 * px(y, x - 1) + px(y + 1, x - 1));
            const double dy = (px(y + 1, x - 1) + 2.0 * px(y + 1, x) + px(y + 1, x + 1)) -
                              (px(y - 1, x - 1) + 2.0 * px(y - 1, x) + px(y - 1, x + 1));
            gx(y, x) = dx / 4.0;
            gy(y, x) = dy / 4.0;
            mag(y, x) = std::hypot(gx(y, x), gy(y, x));
        }
    }

    // 0 = none, 1 = weak, 2 = strong
    std::vector<std::uint8_t> cls(static_cast<std::size_t>(w) * h, 0);
    constexpr double tan22 = 0.41421356237309503;
    for (int y = 1; y + 1 < h; ++y) {
        for (int x = 1; x + 1 < w; ++x) {
            const double m = mag(y, x);
            if (m < low || m == 0.0) continue;
            const double ax = std::abs(gx(y, x)), ay = std::abs(gy(y, x));
            double n1, n2;
            if (ay <= tan22 * ax) {
                n1 = mag(y, x - 1);
                n2 = mag(y, x + 1);
            } else if (ax <= tan22 * ay) {
                n1 = mag(y - 1, x);
                n2 = mag(y + 1, x);
            } else if ((gx(y, x) > 0) == (gy(y, x) > 0)) {
                n1 = mag(y - 1, x - 1);
                n2 = mag(y + 1, x + 1);
            } else {
                n1 = mag(y - 1, x + 1);
                n2 = mag(y + 1, x - 1);
            }
            if (m > n1 && m >= n2) cls[static_cast<std::size_t>(y) * w + x] = m >= high ? 2 : 1;
        }
    }

    std::vector<std::uint8_t> edges(cls.size(), 0);
    std::vector<int> stack;
    for (std::size_t i = 0; i < cls.size(); ++i) {
        if (cls[i] != 2 || edges[i]) continue;
        edges[i] = 1;
        stack.push_back(static_cast<int>(i));
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            const int py = p / w, pxl = p % w;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int yy = py + dy, xx = pxl + dx;
                    if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                    const std::size_t q = static_cast<std::size_t>(yy) * w + xx;
                    if (cls[q] != 0 && !edges[q]) {
                        edges[q] = 1;
                        stack.push_back(static_cast<int>(q));
                    }
                }
            }
        }
    }
    return edges;
}

SmoothMask smoothMask(const Image &reference, const ArtifactParams &params) {
    params.validate();
    const Image gray = luma(reference);
    const int w = gray.width(), h = gray.height();
    std::vector<std::uint8_t> edges = cannyEdges(gray, params.gaussianSigma, params.cannyLow, params.cannyHigh);

    const int r = params.dilationRadius;
    for (int it = 0; it < params.dilationIterations; ++it) {
        std::vector<std::uint8_t> next(edges.size(), 0);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                std::uint8_t v = 0;
                for (int dy = -r; dy <= r && !v; ++dy) {
                    const int yy = y + dy;
                    if (yy < 0 || yy >= h) continue;
                    for (int dx = -r; dx <= r; ++dx) {
                        const int xx = x + dx;
                        if (xx >= 0 && xx < w && edges[static_cast<std::size_t>(yy) * w + xx]) {
                            v = 1;
                            break;
                        }
                    }
                }
                next[static_cast<std::size_t>(y) * w + x] = v;
            }
        }
        edges.swap(next);
    }

    SmoothMask out{w, h, std::vector<std::uint8_t>(edges.size(), 0), params};
    for (int y = 1; y + 1 < h; ++y) {
        for (int x = 1; x + 1 < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            out.mask[i] = edges[i] ? 0 : 1;
        }
    }
    return out;
}

Image absLaplacian(const Image &gray) {
    if (gray.channels() != 1) throw ValidationError("laplacian expects a grayscale image");
    const int w = gray.width(), h = gray.height();
    Image out(w, h);
    for (int y = 1; y + 1 < h; ++y) {
        for (int x = 1; x + 1 < w; ++x) {
            out(y, x) = std::abs(gray(y - 1, x) + gray(y + 1, x) + gray(y, x - 1) + gray(y, x + 1) - 4.0 * gray(y, x));
        }
    }
    return out;
}

ArtifactResult artifactScore(const Image &simulated, const Image &reference, const ArtifactParams &params) {
    if (!simulated.sameShape(reference)) throw ValidationError("artifact score: shape mismatch");
    ArtifactResult result{0.0, smoothMask(reference, params)};
    const std::size_t n = result.mask.count();
    if (n == 0) throw ValidationError("artifact score: no smooth region in the reference");
    const Image lap = absLaplacian(luma(simulated));
    double sum = 0.0;
    const auto l = lap.data();
    for (std::size_t i = 0; i < l.size(); ++i) {
        if (result.mask.mask[i]) sum += l[i];
    }
    result.score = sum / static_cast<double>(n);
    return result;
}

} // namespace bmi::quality
