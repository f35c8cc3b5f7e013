#include <bmi/optics/psf.hpp>

#include <bmi/common/error.hpp>
#include <bmi/optics/raytrace.hpp>

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace bmi::optics {

PsfGrid::PsfGrid(int side_, double pitchUm_)
    : side(side_), pitchUm(pitchUm_), samples(static_cast<std::size_t>(side_) * side_, 0.0) {}

double PsfGrid::sum() const { return std::accumulate(samples.begin(), samples.end(), 0.0); }

void PsfGrid::normalize() {
    const double total = sum();
    if (total <= 0.0) return;
    const double inv = 1.0 / total;
    for (double &s : samples) s *= inv;
}

Vec3 objectPoint(double depth, double fieldAngle) {
    const double z = -depth * 1000.0;
    const double x = depth * 1000.0 * std::tan(fieldAngle * std::numbers::pi / 180.0);
    // Negative x on the object side images onto +x.
    return {-x, 0.0, z};
}

namespace {

Ray rayThrough(const Vec3 &object, double aimX, double aimY, double wavelength) {
    return Ray{object, normalize(Vec3{aimX, aimY, 0.0} - object), wavelength, true};
}

// Height of the ray at the stop plane as a function of the aim point.
double stopHeight(const LensPrescription &lens, const Vec3 &object, double aimX, double wavelength, bool &ok) {
    const TraceResult r = traceRayTo(lens, rayThrough(object, aimX, 0.0, wavelength), lens.stopIndex());
    ok = r.reason == DeadReason::None || r.reason == DeadReason::Clipped;
    return r.point.x;
}

} // namespace

ChiefRay findChiefRay(const LensPrescription &lens, double depth, double fieldAngle, double wavelength) {
    const Vec3 object = objectPoint(depth, fieldAngle);
    ChiefRay chief;
    if (fieldAngle != 0.0) {
        // Secant iteration on the aim point so the ray crosses the stop centre.
        double a0 = 0.0;
        double a1 = 1e-3;
        bool ok0 = false;
        bool ok1 = false;
        double f0 = stopHeight(lens, object, a0, wavelength, ok0);
        double f1 = stopHeight(lens, object, a1, wavelength, ok1);
        for (int it = 0; it < 60 && std::abs(f1) > 1e-12; ++it) {
            if (!ok0 || !ok1 || f1 == f0) throw Error("chief ray search failed");
            const double a2 = a1 - f1 * (a1 - a0) / (f1 - f0);
            a0 = a1;
            f0 = f1;
            ok0 = ok1;
            a1 = a2;
            f1 = stopHeight(lens, object, a1, wavelength, ok1);
        }
        chief.aimX = a1;
    }
    const TraceResult r = traceRay(lens, rayThrough(object, chief.aimX, 0.0, wavelength));
    if (!r.alive()) {
        std::ostringstream msg;
        msg << "chief ray dead (" << toString(r.reason) << ") at depth " << depth << " m, field " << fieldAngle
            << " deg";
        throw OutOfRangeError(msg.str());
    }
    chief.landing = r.point;
    return chief;
}

std::pair<double, double> concentricDisc(double u, double v) {
    const double a = 2.0 * u - 1.0;
    const double b = 2.0 * v - 1.0;
    if (a == 0.0 && b == 0.0) return {0.0, 0.0};
    constexpr double quarter = std::numbers::pi / 4.0;
    double r = 0.0;
    double phi = 0.0;
    if (std::abs(a) > std::abs(b)) {
        r = a;
        phi = quarter * (b / a);
    } else {
        r = b;
        phi = 2.0 * quarter - quarter * (a / b);
    }
    return {r * std::cos(phi), r * std::sin(phi)};
}

PsfGrid computePsf(const LensPrescription &lens, double depth, double fieldAngle, double wavelength,
                   const PsfOptions &options) {
    if (options.gridSize <= 0 || !(options.pitchUm > 0.0)) throw ConfigError("invalid PSF grid options");
    if (options.pupilSamples < 1) throw ConfigError("pupil sample count must be positive");
    if (!std::isfinite(depth) || depth <= 0.0) throw ValidationError("object depth must be positive");
    if (!(fieldAngle >= 0.0 && fieldAngle < 90.0)) throw OutOfRangeError("field angle must lie in [0, 90) deg");

    const ChiefRay chief = findChiefRay(lens, depth, fieldAngle, wavelength);
    const Vec3 object = objectPoint(depth, fieldAngle);

    PsfGrid grid(options.gridSize, options.pitchUm);
    grid.centerX = chief.landing.x;
    grid.centerY = chief.landing.y;
    grid.wavelength = wavelength;
    grid.depth = depth;
    grid.fieldAngle = fieldAngle;

    const int n = options.pupilSamples;
    const double radius = lens.entranceSemiDiameter() * options.apertureScale;
    const double pitchMm = options.pitchUm * 1e-3;
    const double half = 0.5 * options.gridSize;
    std::uint64_t survived = 0;
    std::uint64_t inside = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const auto [dx, dy] = concentricDisc((j + 0.5) / n, (i + 0.5) / n);
            const TraceResult r = traceRay(lens, rayThrough(object, chief.aimX + radius * dx, radius * dy, wavelength));
            if (!r.alive()) continue;
            ++survived;
            const double col = std::floor((r.point.x - grid.centerX) / pitchMm + half);
            const double row = std::floor((r.point.y - grid.centerY) / pitchMm + half);
            if (col < 0.0 || row < 0.0 || col >= options.gridSize || row >= options.gridSize) continue;
            ++inside;
            grid.at(static_cast<int>(row), static_cast<int>(col)) += 1.0;
        }
    }
    grid.raysLaunched = static_cast<std::uint64_t>(n) * n;
    grid.raysSurvived = survived;
    grid.raysInGrid = inside;
    if (survived == 0 || inside == 0) {
        std::ostringstream msg;
        msg << "empty PSF at depth " << depth << " m, field " << fieldAngle << " deg, " << wavelength << " nm";
        throw Error(msg.str());
    }
    grid.capturedEnergyFraction = static_cast<double>(inside) / static_cast<double>(survived);
    grid.normalize();
    return grid;
}

PsfStats psfStats(const PsfGrid &grid) {
    PsfStats stats;
    const double total = grid.sum();
    if (total <= 0.0) return stats;
    const double half = 0.5 * grid.side;
    double mx = 0.0;
    double my = 0.0;
    for (int r = 0; r < grid.side; ++r) {
        for (int c = 0; c < grid.side; ++c) {
            const double w = grid.at(r, c);
            mx += w * (c + 0.5 - half);
            my += w * (r + 0.5 - half);
        }
    }
    mx /= total;
    my /= total;
    double m2 = 0.0;
    for (int r = 0; r < grid.side; ++r) {
        for (int c = 0; c < grid.side; ++c) {
            const double dx = c + 0.5 - half - mx;
            const double dy = r + 0.5 - half - my;
            m2 += grid.at(r, c) * (dx * dx + dy * dy);
        }
    }
    stats.centroidX = mx * grid.pitchUm;
    stats.centroidY = my * grid.pitchUm;
    stats.secondMomentRadius = std::sqrt(m2 / total) * grid.pitchUm;
    return stats;
}

} // namespace bmi::optics
