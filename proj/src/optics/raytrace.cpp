#include <bmi/optics/raytrace.hpp>

#include <cmath>
#include <limits>

namespace bmi::optics {

std::string_view toString(DeadReason reason) {
    switch (reason) {
    case DeadReason::None: return "alive";
    case DeadReason::Miss: return "miss";
    case DeadReason::Clipped: return "clipped";
    case DeadReason::Tir: return "tir";
    }
    return "unknown";
}

std::optional<Vec3> refract(const Vec3 &incident, const Vec3 &normal, double n1, double n2) {
    Vec3 n = normal;
    double cosI = -dot(n, incident);
    if (cosI < 0.0) {
        n = -n;
        cosI = -cosI;
    }
    const double eta = n1 / n2;
    const double k = 1.0 - eta * eta * (1.0 - cosI * cosI);
    if (k < 0.0) return std::nullopt;
    return normalize(incident * eta + n * (eta * cosI - std::sqrt(k)));
}

namespace {

constexpr double kNewtonTolerance = 1e-10;
constexpr int kNewtonMaxIterations = 50;

struct Hit {
    double t = 0.0;
    Vec3 point;
};

// Intersection with a sphere (or plane) whose vertex sits at z = vertex.
std::optional<Hit> intersectBase(const Vec3 &p, const Vec3 &d, double vertex, double radius) {
    if (!std::isfinite(radius)) {
        if (d.z <= 0.0) return std::nullopt;
        const double t = (vertex - p.z) / d.z;
        return Hit{t, p + d * t};
    }
    const Vec3 center{0.0, 0.0, vertex + radius};
    const Vec3 oc = p - center;
    const double b = dot(oc, d);
    const double c = dot(oc, oc) - radius * radius;
    const double disc = b * b - c;
    if (disc < 0.0) return std::nullopt;
    const double sq = std::sqrt(disc);
    // Light travels +z: the cap around the vertex is the near root for R > 0
    // and the far root for R < 0.
    const double t = radius > 0.0 ? -b - sq : -b + sq;
    return Hit{t, p + d * t};
}

// Damped Newton refinement of the surface crossing for an even asphere.
std::optional<Hit> intersectAsphere(const Vec3 &p, const Vec3 &d, double vertex, const Surface &s) {
    auto start = intersectBase(p, d, vertex, s.radius);
    double t = start ? start->t : (vertex - p.z) / d.z;
    auto residual = [&](double tt) {
        const Vec3 q = p + d * tt;
        return q.z - vertex - s.sag(std::hypot(q.x, q.y));
    };
    double f = residual(t);
    for (int it = 0; it < kNewtonMaxIterations && std::abs(f) > kNewtonTolerance; ++it) {
        const Vec3 q = p + d * t;
        const double r = std::hypot(q.x, q.y);
        double dfdt = d.z;
        if (r > 0.0) dfdt -= s.sagSlope(r) * (q.x * d.x + q.y * d.y) / r;
        if (dfdt == 0.0 || !std::isfinite(dfdt)) return std::nullopt;
        double step = -f / dfdt;
        double next = residual(t + step);
        int halvings = 0;
        while (!(std::abs(next) < std::abs(f)) && halvings < 30) {
            step *= 0.5;
            next = residual(t + step);
            ++halvings;
        }
        t += step;
        f = next;
    }
    if (!(std::abs(f) <= kNewtonTolerance)) return std::nullopt;
    return Hit{t, p + d * t};
}

Vec3 surfaceNormal(const Surface &s, const Vec3 &q, double vertex) {
    if (s.kind == SurfaceKind::EvenAsphere) {
        const double r = std::hypot(q.x, q.y);
        if (r == 0.0) return {0.0, 0.0, 1.0};
        const double slope = s.sagSlope(r);
        return normalize(Vec3{-slope * q.x / r, -slope * q.y / r, 1.0});
    }
    if (s.isPlanar()) return {0.0, 0.0, 1.0};
    const Vec3 center{0.0, 0.0, vertex + s.radius};
    return normalize(q - center);
}

} // namespace

TraceResult traceRayTo(const LensPrescription &lens, const Ray &ray, std::size_t last) {
    TraceResult result;
    Vec3 p = ray.origin;
    Vec3 d = normalize(ray.direction);
    const auto &surfaces = lens.surfaces();
    double n1 = lens.mediumBefore(0).index(ray.wavelength);

    auto die = [&](DeadReason reason, std::size_t at) {
        result.reason = reason;
        result.surface = at;
        result.point = p;
        result.direction = d;
        return result;
    };
    if (!ray.alive) return die(DeadReason::Miss, 0);

    for (std::size_t i = 0; i <= last && i < surfaces.size(); ++i) {
        const Surface &s = surfaces[i];
        const double vertex = lens.vertexZ(i);
        std::optional<Hit> hit = s.kind == SurfaceKind::EvenAsphere ? intersectAsphere(p, d, vertex, s)
                                                                    : intersectBase(p, d, vertex, s.radius);
        if (!hit || hit->t < -1e-9) return die(DeadReason::Miss, i);
        p = hit->point;
        const double r = std::hypot(p.x, p.y);
        if (r > s.semiDiameter) return die(DeadReason::Clipped, i);
        if (!s.isPlanar() && s.kind != SurfaceKind::EvenAsphere && r > std::abs(s.radius)) {
            return die(DeadReason::Miss, i);
        }
        const double n2 = s.material.index(ray.wavelength);
        if (n1 != n2) {
            auto refracted = refract(d, surfaceNormal(s, p, vertex), n1, n2);
            if (!refracted) return die(DeadReason::Tir, i);
            d = *refracted;
        }
        n1 = n2;
    }
    if (last < surfaces.size()) {
        result.point = p;
        result.direction = d;
        result.surface = last;
        return result;
    }

    auto hit = intersectBase(p, d, lens.sensorZ(), lens.sensor().radius);
    if (!hit || hit->t < -1e-9) return die(DeadReason::Miss, surfaces.size());
    p = hit->point;
    result.point = p;
    result.direction = d;
    result.surface = surfaces.size();
    return result;
}

TraceResult traceRay(const LensPrescription &lens, const Ray &ray) {
    return traceRayTo(lens, ray, lens.surfaces().size());
}

double paraxialPower(const LensPrescription &lens, double wavelengthNm) {
    // Marginal ray entering parallel at unit height.
    double y = 1.0;
    double nu = 0.0;
    double n1 = lens.mediumBefore(0).index(wavelengthNm);
    const auto &surfaces = lens.surfaces();
    for (std::size_t i = 0; i < surfaces.size(); ++i) {
        const Surface &s = surfaces[i];
        const double n2 = s.material.index(wavelengthNm);
        nu -= y * (n2 - n1) * s.curvature();
        if (i + 1 < surfaces.size()) y += s.thickness * nu / n2;
        n1 = n2;
    }
    return -nu;
}

double paraxialEfl(const LensPrescription &lens, double wavelengthNm) {
    const double power = paraxialPower(lens, wavelengthNm);
    if (std::abs(power) < 1e-15) return std::numeric_limits<double>::infinity();
    return 1.0 / power;
}

double tracedEfl(const LensPrescription &lens, double wavelengthNm, double height) {
    Ray ray{{0.0, height, -1.0}, {0.0, 0.0, 1.0}, wavelengthNm, true};
    const TraceResult out = traceRayTo(lens, ray, lens.surfaces().size() - 1);
    if (!out.alive()) return std::numeric_limits<double>::quiet_NaN();
    const double exitIndex = lens.surfaces().back().material.index(wavelengthNm);
    if (out.direction.y == 0.0) return std::numeric_limits<double>::infinity();
    // Reduced exit angle n'·sin(u') equals -height·power for a paraxial ray.
    return -height / (exitIndex * out.direction.y);
}

} // namespace bmi::optics
