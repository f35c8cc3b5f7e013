#pragma once

#include <bmi/optics/prescription.hpp>
#include <bmi/optics/vec3.hpp>

#include <cstddef>
#include <optional>
#include <string_view>

namespace bmi::optics {

struct Ray {
    Vec3 origin;
    Vec3 direction; ///< unit length
    double wavelength = kWavelengthGreen;
    bool alive = true;
};

/// Why a ray stopped before reaching the sensor.
enum class DeadReason { None, Miss, Clipped, Tir };

std::string_view toString(DeadReason reason);

struct TraceResult {
    DeadReason reason = DeadReason::None;
    /// Surface index at which the ray died; surfaces().size() denotes the sensor.
    std::size_t surface = 0;
    /// Sensor intersection (or last valid point when dead).
    Vec3 point;
    /// Direction after the last surface.
    Vec3 direction;

    bool alive() const { return reason == DeadReason::None; }
};

/// Vector Snell refraction. The normal may face either side of the interface.
/// Returns nullopt on total internal reflection.
std::optional<Vec3> refract(const Vec3 &incident, const Vec3 &normal, double n1, double n2);

/// Sequential trace from object space to the image surface.
TraceResult traceRay(const LensPrescription &lens, const Ray &ray);

/// Sequential trace that stops after refracting at surface `last` (inclusive).
TraceResult traceRayTo(const LensPrescription &lens, const Ray &ray, std::size_t last);

/// Paraxial y-nu reduction: system power in mm^-1.
double paraxialPower(const LensPrescription &lens, double wavelengthNm);

/// Effective focal length 1/power in mm; +infinity for an afocal system.
double paraxialEfl(const LensPrescription &lens, double wavelengthNm);

/// Focal length measured with a real ray entering parallel to the axis at
/// `height` mm: -height / tan(exit slope).
double tracedEfl(const LensPrescription &lens, double wavelengthNm, double height);

} // namespace bmi::optics
