#pragma once

#include <bmi/optics/material.hpp>

#include <array>
#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace bmi::optics {

inline constexpr double kInfiniteRadius = std::numeric_limits<double>::infinity();

enum class SurfaceKind { Sphere, Stop, EvenAsphere };

std::string_view toString(SurfaceKind kind);

struct Surface {
    SurfaceKind kind = SurfaceKind::Sphere;
    /// Signed vertex radius in mm; kInfiniteRadius for a plane.
    double radius = kInfiniteRadius;
    /// Axial gap to the next surface (or to the sensor for the last one).
    double thickness = 0.0;
    /// Medium following this surface.
    GlassMaterial material = GlassMaterial::air();
    double semiDiameter = 0.0;
    /// r^4, r^6, r^8, r^10 coefficients.
    std::array<double, 4> asphere{};

    bool isPlanar() const { return !std::isfinite(radius); }
    double curvature() const { return isPlanar() ? 0.0 : 1.0 / radius; }

    /// Axial sag z(r) measured from the vertex.
    double sag(double r) const;
    /// dz/dr of the sag profile.
    double sagSlope(double r) const;
};

struct Sensor {
    double radius = kInfiniteRadius;
    double semiDiameter = 0.0;
};

/// Ordered refracting surfaces plus a curved image surface. The first
/// surface vertex sits at z = 0 and light travels towards +z.
class LensPrescription {
  public:
    LensPrescription(std::string name, std::vector<Surface> surfaces, Sensor sensor,
                     double entranceSemiDiameter);

    const std::string &name() const { return name_; }
    const std::vector<Surface> &surfaces() const { return surfaces_; }
    const Sensor &sensor() const { return sensor_; }
    double entranceSemiDiameter() const { return entranceSemiDiameter_; }

    /// Vertex z of surface i; index surfaces().size() is the sensor vertex.
    double vertexZ(std::size_t i) const { return vertexZ_.at(i); }
    double sensorZ() const { return vertexZ_.back(); }
    std::size_t stopIndex() const { return stopIndex_; }

    /// Medium in front of surface i (air for i = 0).
    const GlassMaterial &mediumBefore(std::size_t i) const;

  private:
    std::string name_;
    std::vector<Surface> surfaces_;
    Sensor sensor_;
    double entranceSemiDiameter_;
    std::vector<double> vertexZ_;
    std::size_t stopIndex_ = 0;
};

/// Parses and validates a JSON prescription document.
LensPrescription parsePrescription(std::string_view jsonText, const MaterialCatalog &catalog);
LensPrescription loadPrescription(const std::filesystem::path &path, const MaterialCatalog &catalog);

} // namespace bmi::optics
