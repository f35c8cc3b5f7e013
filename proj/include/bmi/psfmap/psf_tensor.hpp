#pragma once

#include <bmi/optics/psf.hpp>

#include <filesystem>
#include <vector>

namespace bmi::psfmap {

/// Depth sample grid d_j = min + j*step, evaluated by index so that the grid
/// is identical wherever it is rebuilt.
struct DepthGrid {
    double min = 0.7;
    double max = 10.0;
    double step = 0.1;

    int count() const;
    double depth(int index) const { return min + step * index; }
    std::vector<double> values() const;
    /// Nearest sample, halves rounded towards the farther sample.
    int nearestIndex(double depth) const;

    bool operator==(const DepthGrid &) const = default;
};

/// Default field sampling 0.0, 0.5, ..., 6.0 deg.
std::vector<double> defaultThetaSamples();

/// PSF(c, theta, d) at the fine trace pitch. Channel 0/1/2 = R/G/B.
class PsfTensor {
  public:
    PsfTensor(std::vector<double> thetaSamples, std::vector<double> depthSamples, int channels = 3);

    int channels() const { return channels_; }
    const std::vector<double> &thetaSamples() const { return theta_; }
    const std::vector<double> &depthSamples() const { return depth_; }

    const optics::PsfGrid &grid(int channel, int theta, int depth) const;
    void set(int channel, int theta, int depth, optics::PsfGrid grid);
    bool complete() const;

    /// Index of the depth sample nearest to `depth`.
    int nearestDepthIndex(double depth) const;

    void save(const std::filesystem::path &path) const;
    static PsfTensor load(const std::filesystem::path &path);

  private:
    std::size_t slot(int channel, int theta, int depth) const;

    int channels_;
    std::vector<double> theta_;
    std::vector<double> depth_;
    std::vector<optics::PsfGrid> grids_;
    std::vector<bool> present_;
};

/// Traces every (channel, theta, depth) cell; cells are evaluated
/// concurrently and stored by index, so the result does not depend on
/// scheduling.
PsfTensor buildPsfTensor(const optics::LensPrescription &lens, const std::vector<double> &thetaSamples,
                         const std::vector<double> &depthSamples, const optics::PsfOptions &options);

/// Tensor whose every cell is a unit impulse at the grid centre (debug
/// pipeline: rendering with it reproduces the input image).
PsfTensor deltaPsfTensor(const std::vector<double> &thetaSamples, const std::vector<double> &depthSamples,
                         int side = optics::kPsfGridSize, double pitchUm = optics::kPsfPitchUm);

} // namespace bmi::psfmap
