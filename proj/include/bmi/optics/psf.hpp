#pragma once

#include <bmi/optics/prescription.hpp>
#include <bmi/optics/vec3.hpp>

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace bmi::optics {

inline constexpr int kPsfGridSize = 128;
inline constexpr double kPsfPitchUm = 0.4;

/// Square PSF sample grid. Pixel (row, col) covers sensor offsets
/// [col - side/2, col - side/2 + 1) x [row - side/2, row - side/2 + 1) pitches
/// from `center`, so the chief ray sits on the grid's geometric centre.
/// Columns follow sensor +x, rows sensor +y.
struct PsfGrid {
    int side = 0;
    double pitchUm = kPsfPitchUm;
    std::vector<double> samples;
    double centerX = 0.0; ///< mm
    double centerY = 0.0; ///< mm
    double wavelength = kWavelengthGreen;
    double depth = 0.0;      ///< m
    double fieldAngle = 0.0; ///< deg
    double capturedEnergyFraction = 1.0;

    std::uint64_t raysLaunched = 0;
    std::uint64_t raysSurvived = 0;
    std::uint64_t raysInGrid = 0;

    PsfGrid() = default;
    PsfGrid(int side, double pitchUm);

    double &at(int row, int col) { return samples[static_cast<std::size_t>(row) * side + col]; }
    double at(int row, int col) const { return samples[static_cast<std::size_t>(row) * side + col]; }
    double sum() const;
    /// Scales samples to unit sum; a zero grid is left unchanged.
    void normalize();
};

struct PsfOptions {
    int gridSize = kPsfGridSize;
    double pitchUm = kPsfPitchUm;
    /// Per-axis count of the stratified pupil grid (n x n rays).
    int pupilSamples = 512;
    /// Fraction of the entrance semi-diameter actually sampled.
    double apertureScale = 1.0;
};

/// Object point at `depth` metres in front of the first vertex and `fieldAngle`
/// degrees off axis, placed so that its image falls on sensor +x.
Vec3 objectPoint(double depth, double fieldAngle);

/// Ray from the object point through the centre of the stop.
struct ChiefRay {
    double aimX = 0.0; ///< intersection with the z = 0 plane, mm
    Vec3 landing;      ///< sensor intersection
};
ChiefRay findChiefRay(const LensPrescription &lens, double depth, double fieldAngle, double wavelength);

/// Maps a point of [0,1)^2 onto the unit disc with the concentric mapping.
std::pair<double, double> concentricDisc(double u, double v);

/// Traces a disc-sampled bundle from the object point and bins the sensor
/// landings. Throws Error when no ray reaches the sensor.
PsfGrid computePsf(const LensPrescription &lens, double depth, double fieldAngle, double wavelength,
                   const PsfOptions &options = {});

struct PsfStats {
    double centroidX = 0.0; ///< um from the grid centre
    double centroidY = 0.0;
    double secondMomentRadius = 0.0; ///< um
};

PsfStats psfStats(const PsfGrid &grid);

} // namespace bmi::optics
