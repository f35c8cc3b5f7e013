#include <bmi/psfmap/psf_map.hpp>

#include <bmi/common/error.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace bmi::psfmap {

void SensorGeometry::validate() const {
    if (width <= 0 || height <= 0) throw ConfigError("sensor dimensions must be positive");
    if (!(pixelPitchUm > 0.0)) throw ConfigError("pixel pitch must be positive");
    if (!(maxFieldDeg > 0.0)) throw ConfigError("max field must be positive");
}

std::vector<double> interpWeights(double thetaQuery, std::span<const double> samples) {
    if (samples.empty()) throw ConfigError("no field samples");
    if (thetaQuery < samples.front() - 1e-12 || thetaQuery > samples.back() + 1e-12) {
        std::ostringstream msg;
        msg << "field angle " << thetaQuery << " deg outside sampled range [" << samples.front() << ", "
            << samples.back() << "]";
        throw OutOfRangeError(msg.str());
    }
    std::vector<double> weights(samples.size(), 0.0);
    const auto hiIt = std::ranges::lower_bound(samples, thetaQuery);
    const auto hi = static_cast<std::size_t>(std::min<std::ptrdiff_t>(hiIt - samples.begin(), samples.size() - 1));
    if (samples[hi] == thetaQuery || hi == 0) {
        weights[hi] = 1.0;
        return weights;
    }
    const std::size_t lo = hi - 1;
    if (samples[lo] == thetaQuery) {
        weights[lo] = 1.0;
        return weights;
    }
    const double dl = thetaQuery - samples[lo];
    const double dh = samples[hi] - thetaQuery;
    // 1/dl^2 : 1/dh^2, normalised; written in the form that stays finite
    // as either distance approaches zero.
    const double wl = dh * dh / (dl * dl + dh * dh);
    weights[lo] = wl;
    weights[hi] = 1.0 - wl;
    return weights;
}

optics::PsfGrid rotatePsf(const optics::PsfGrid &grid, double phiDeg) {
    optics::PsfGrid out = grid;
    std::ranges::fill(out.samples, 0.0);

    double c = 0.0;
    double s = 0.0;
    const double quarter = phiDeg / 90.0;
    if (quarter == std::round(quarter)) {
        static constexpr double kCos[4] = {1.0, 0.0, -1.0, 0.0};
        static constexpr double kSin[4] = {0.0, 1.0, 0.0, -1.0};
        const auto q = static_cast<int>(((static_cast<long long>(quarter) % 4) + 4) % 4);
        c = kCos[q];
        s = kSin[q];
    } else {
        const double phi = phiDeg * std::numbers::pi / 180.0;
        c = std::cos(phi);
        s = std::sin(phi);
    }

    const int n = grid.side;
    const double half = 0.5 * n;
    for (int r = 0; r < n; ++r) {
        const double y = r + 0.5 - half;
        for (int col = 0; col < n; ++col) {
            const double x = col + 0.5 - half;
            // Inverse rotation back into the source grid.
            const double sx = c * x + s * y + half - 0.5;
            const double sy = -s * x + c * y + half - 0.5;
            const double fx = std::floor(sx);
            const double fy = std::floor(sy);
            const double ax = sx - fx;
            const double ay = sy - fy;
            const int ix = static_cast<int>(fx);
            const int iy = static_cast<int>(fy);
            auto sample = [&](int yy, int xx) {
                return (xx < 0 || yy < 0 || xx >= n || yy >= n) ? 0.0 : grid.at(yy, xx);
            };
            double v = 0.0;
            if (ax == 0.0 && ay == 0.0) {
                v = sample(iy, ix);
            } else {
                v = (1.0 - ay) * ((1.0 - ax) * sample(iy, ix) + ax * sample(iy, ix + 1)) +
                    ay * ((1.0 - ax) * sample(iy + 1, ix) + ax * sample(iy + 1, ix + 1));
            }
            out.at(r, col) = v;
        }
    }
    out.normalize();
    return out;
}

namespace {

int pitchRatio(double pitchUm, double targetPitchUm) {
    if (!(targetPitchUm >= pitchUm)) throw ConfigError("target pitch must not be finer than the PSF pitch");
    const double ratio = targetPitchUm / pitchUm;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * ratio) {
        std::ostringstream msg;
        msg << "non-integer pitch ratio " << ratio << " (" << pitchUm << " um -> " << targetPitchUm << " um)";
        throw ConfigError(msg.str());
    }
    return static_cast<int>(rounded);
}

} // namespace

int resizedSide(int side, double pitchUm, double targetPitchUm) {
    const int k = pitchRatio(pitchUm, targetPitchUm);
    return (side + k - 1) / k;
}

optics::PsfGrid resizePsf(const optics::PsfGrid &grid, double targetPitchUm, bool renormalize) {
    const int k = pitchRatio(grid.pitchUm, targetPitchUm);
    if (k == 1) {
        optics::PsfGrid out = grid;
        out.pitchUm = targetPitchUm;
        if (renormalize) out.normalize();
        return out;
    }
    const int coarse = (grid.side + k - 1) / k;
    const int padBefore = (coarse * k - grid.side) / 2;

    optics::PsfGrid out = grid;
    out.side = coarse;
    out.pitchUm = targetPitchUm;
    out.samples.assign(static_cast<std::size_t>(coarse) * coarse, 0.0);
    for (int r = 0; r < grid.side; ++r) {
        const int cr = (r + padBefore) / k;
        for (int c = 0; c < grid.side; ++c) {
            out.at(cr, (c + padBefore) / k) += grid.at(r, c);
        }
    }
    if (renormalize) out.normalize();
    return out;
}

PixelField pixelField(const SensorGeometry &geometry, double row, double col) {
    const double dh = row - 0.5 * geometry.height;
    const double dw = col - 0.5 * geometry.width;
    const double rMax = std::hypot(0.5 * geometry.height, 0.5 * geometry.width);
    PixelField f;
    f.theta = geometry.maxFieldDeg * std::hypot(dh, dw) / rMax;
    f.phi = (dh == 0.0 && dw == 0.0) ? 0.0 : std::atan2(dh, dw) * 180.0 / std::numbers::pi;
    return f;
}

optics::PsfGrid blendPsf(const PsfTensor &tensor, int channel, int depthIndex, std::span<const double> weights) {
    if (weights.size() != tensor.thetaSamples().size()) throw ValidationError("weight count mismatch");
    const optics::PsfGrid *first = nullptr;
    optics::PsfGrid out;
    for (std::size_t t = 0; t < weights.size(); ++t) {
        if (weights[t] == 0.0) continue;
        const optics::PsfGrid &g = tensor.grid(channel, static_cast<int>(t), depthIndex);
        if (!first) {
            first = &g;
            out = g;
            std::ranges::fill(out.samples, 0.0);
            out.capturedEnergyFraction = 0.0;
            out.fieldAngle = 0.0;
        }
        if (g.side != out.side) throw ValidationError("PSF tensor grids differ in size");
        for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] += weights[t] * g.samples[i];
        out.capturedEnergyFraction += weights[t] * g.capturedEnergyFraction;
        out.fieldAngle += weights[t] * g.fieldAngle;
    }
    if (!first) throw ValidationError("all interpolation weights are zero");
    return out;
}

optics::PsfGrid psfAtIndex(const PsfTensor &tensor, const SensorGeometry &geometry, int channel, int row, int col,
                           int depthIndex) {
    if (row < 0 || col < 0 || row >= geometry.height || col >= geometry.width) {
        throw OutOfRangeError("pixel outside the sensor");
    }
    const PixelField field = pixelField(geometry, row, col);
    if (field.theta > geometry.maxFieldDeg + 1e-12) throw OutOfRangeError("pixel beyond the maximum field");
    const auto weights = interpWeights(field.theta, tensor.thetaSamples());
    optics::PsfGrid blended = blendPsf(tensor, channel, depthIndex, weights);
    blended.fieldAngle = field.theta;
    return resizePsf(rotatePsf(blended, field.phi), geometry.pixelPitchUm);
}

optics::PsfGrid psfAt(const PsfTensor &tensor, const SensorGeometry &geometry, int channel, int row, int col,
                      double depth) {
    return psfAtIndex(tensor, geometry, channel, row, col, tensor.nearestDepthIndex(depth));
}

} // namespace bmi::psfmap
