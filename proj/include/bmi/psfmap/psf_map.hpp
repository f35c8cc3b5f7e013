#pragma once

#include <bmi/psfmap/psf_tensor.hpp>

#include <span>
#include <vector>

namespace bmi::psfmap {

struct SensorGeometry {
    int width = 640;
    int height = 480;
    double pixelPitchUm = 2.0;
    double maxFieldDeg = 6.0;

    void validate() const;
};

/// Inverse-square weights over the two samples bracketing thetaQuery.
/// The result has one entry per sample and sums to one.
std::vector<double> interpWeights(double thetaQuery, std::span<const double> thetaSamples);

/// Rotates the grid about its geometric centre by phi degrees (bilinear,
/// zero outside), mapping the +column axis onto direction (cos phi, sin phi)
/// in (column, row) coordinates, then renormalises to unit sum.
optics::PsfGrid rotatePsf(const optics::PsfGrid &grid, double phiDeg);

/// Pads to a multiple of the integer pitch ratio, box-filters down to
/// targetPitchUm, and optionally renormalises to unit sum.
optics::PsfGrid resizePsf(const optics::PsfGrid &grid, double targetPitchUm, bool renormalize = true);

/// Side length produced by resizePsf for the given fine grid.
int resizedSide(int side, double pitchUm, double targetPitchUm);

/// Field angle (deg) and azimuth (deg) of a sensor pixel under the linear
/// f-theta mapping, theta = maxField * r / r_max with r_max the half diagonal.
struct PixelField {
    double theta = 0.0;
    double phi = 0.0;
};
PixelField pixelField(const SensorGeometry &geometry, double row, double col);

/// Weighted sum of the tensor grids at one depth; weights are accumulated in
/// ascending theta order and zero weights are skipped.
optics::PsfGrid blendPsf(const PsfTensor &tensor, int channel, int depthIndex, std::span<const double> weights);

/// Spatially varying PSF of a sensor pixel at sensor pitch (unit sum).
optics::PsfGrid psfAt(const PsfTensor &tensor, const SensorGeometry &geometry, int channel, int row, int col,
                      double depth);
optics::PsfGrid psfAtIndex(const PsfTensor &tensor, const SensorGeometry &geometry, int channel, int row, int col,
                           int depthIndex);

} // namespace bmi::psfmap
