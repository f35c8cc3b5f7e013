#include <bmi/psfmap/psf_tensor.hpp>

#include <bmi/common/binary_io.hpp>
#include <bmi/common/error.hpp>
#include <bmi/common/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace bmi::psfmap {

int DepthGrid::count() const {
    if (!(step > 0.0) || max < min) throw ConfigError("invalid depth grid");
    return static_cast<int>(std::floor((max - min) / step + 1e-9)) + 1;
}

std::vector<double> DepthGrid::values() const {
    std::vector<double> out(static_cast<std::size_t>(count()));
    for (int j = 0; j < count(); ++j) out[j] = depth(j);
    return out;
}

int DepthGrid::nearestIndex(double d) const {
    const double clamped = std::clamp(d, min, max);
    const int k = static_cast<int>(std::floor((clamped - min) / step + 0.5 + 1e-9));
    return std::clamp(k, 0, count() - 1);
}

std::vector<double> defaultThetaSamples() {
    std::vector<double> out;
    for (int i = 0; i <= 12; ++i) out.push_back(0.5 * i);
    return out;
}

PsfTensor::PsfTensor(std::vector<double> thetaSamples, std::vector<double> depthSamples, int channels)
    : channels_(channels), theta_(std::move(thetaSamples)), depth_(std::move(depthSamples)) {
    if (channels_ <= 0 || theta_.empty() || depth_.empty()) throw ConfigError("PSF tensor needs samples");
    if (!std::ranges::is_sorted(theta_) || !std::ranges::is_sorted(depth_)) {
        throw ConfigError("PSF tensor samples must be sorted");
    }
    const std::size_t n = static_cast<std::size_t>(channels_) * theta_.size() * depth_.size();
    grids_.resize(n);
    present_.assign(n, false);
}

std::size_t PsfTensor::slot(int channel, int theta, int depth) const {
    if (channel < 0 || channel >= channels_ || theta < 0 || theta >= static_cast<int>(theta_.size()) || depth < 0 ||
        depth >= static_cast<int>(depth_.size())) {
        throw OutOfRangeError("PSF tensor index out of range");
    }
    return (static_cast<std::size_t>(channel) * theta_.size() + theta) * depth_.size() + depth;
}

const optics::PsfGrid &PsfTensor::grid(int channel, int theta, int depth) const {
    const std::size_t s = slot(channel, theta, depth);
    if (!present_[s]) throw ValidationError("PSF tensor cell missing");
    return grids_[s];
}

void PsfTensor::set(int channel, int theta, int depth, optics::PsfGrid grid) {
    const std::size_t s = slot(channel, theta, depth);
    grids_[s] = std::move(grid);
    present_[s] = true;
}

bool PsfTensor::complete() const { return std::ranges::all_of(present_, [](bool b) { return b; }); }

int PsfTensor::nearestDepthIndex(double d) const {
    auto it = std::ranges::lower_bound(depth_, d);
    if (it == depth_.begin()) return 0;
    if (it == depth_.end()) return static_cast<int>(depth_.size()) - 1;
    const auto hi = static_cast<int>(it - depth_.begin());
    return (d - depth_[hi - 1] < depth_[hi] - d) ? hi - 1 : hi;
}

namespace {
constexpr char kTensorMagic[8] = {'B', 'M', 'I', 'T', 'N', 'S', '1', '\0'};
}

void PsfTensor::save(const std::filesystem::path &path) const {
    if (!complete()) throw ValidationError("cannot save incomplete PSF tensor");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write PSF tensor: " + path.string());
    out.write(kTensorMagic, sizeof(kTensorMagic));
    const auto &first = grids_.front();
    binary::writeLE<std::int32_t>(out, channels_);
    binary::writeLE<std::int32_t>(out, static_cast<std::int32_t>(theta_.size()));
    binary::writeLE<std::int32_t>(out, static_cast<std::int32_t>(depth_.size()));
    binary::writeLE<std::int32_t>(out, first.side);
    binary::writeLE<double>(out, first.pitchUm);
    for (double t : theta_) binary::writeLE(out, t);
    for (double d : depth_) binary::writeLE(out, d);
    for (const auto &g : grids_) {
        if (g.side != first.side || g.pitchUm != first.pitchUm) throw ValidationError("PSF tensor grids differ in size");
        binary::writeLE(out, g.centerX);
        binary::writeLE(out, g.centerY);
        binary::writeLE(out, g.wavelength);
        binary::writeLE(out, g.capturedEnergyFraction);
        binary::writeLE<std::uint64_t>(out, g.raysLaunched);
        binary::writeLE<std::uint64_t>(out, g.raysSurvived);
        binary::writeLE<std::uint64_t>(out, g.raysInGrid);
        binary::writeArrayLE(out, g.samples.data(), g.samples.size());
    }
    if (!out) throw IoError("write failed: " + path.string());
}

PsfTensor PsfTensor::load(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open PSF tensor: " + path.string());
    char magic[8];
    if (!in.read(magic, 8) || !std::equal(magic, magic + 8, kTensorMagic)) {
        throw ParseError("not a PSF tensor file: " + path.string());
    }
    std::int32_t channels = 0, thetas = 0, depths = 0, side = 0;
    double pitch = 0.0;
    bool ok = binary::readLE(in, channels) && binary::readLE(in, thetas) && binary::readLE(in, depths) &&
              binary::readLE(in, side) && binary::readLE(in, pitch);
    if (!ok || channels <= 0 || thetas <= 0 || depths <= 0 || side <= 0) {
        throw ParseError("corrupt PSF tensor header: " + path.string());
    }
    std::vector<double> theta(thetas), depth(depths);
    for (auto &t : theta) ok = ok && binary::readLE(in, t);
    for (auto &d : depth) ok = ok && binary::readLE(in, d);
    PsfTensor tensor(theta, depth, channels);
    for (int c = 0; c < channels; ++c) {
        for (int t = 0; t < thetas; ++t) {
            for (int d = 0; d < depths; ++d) {
                optics::PsfGrid g(side, pitch);
                g.fieldAngle = theta[t];
                g.depth = depth[d];
                ok = ok && binary::readLE(in, g.centerX) && binary::readLE(in, g.centerY) &&
                     binary::readLE(in, g.wavelength) && binary::readLE(in, g.capturedEnergyFraction) &&
                     binary::readLE(in, g.raysLaunched) && binary::readLE(in, g.raysSurvived) &&
                     binary::readLE(in, g.raysInGrid);
                ok = ok && binary::readArrayLE(in, g.samples.data(), g.samples.size());
                if (!ok) throw ParseError("truncated PSF tensor: " + path.string());
                tensor.set(c, t, d, std::move(g));
            }
        }
    }
    return tensor;
}

PsfTensor buildPsfTensor(const optics::LensPrescription &lens, const std::vector<double> &thetaSamples,
                         const std::vector<double> &depthSamples, const optics::PsfOptions &options) {
    PsfTensor tensor(thetaSamples, depthSamples, 3);
    const std::size_t nt = thetaSamples.size();
    const std::size_t nd = depthSamples.size();
    std::vector<optics::PsfGrid> cells(3 * nt * nd);
    parallelFor(cells.size(), [&](std::size_t i) {
        const std::size_t c = i / (nt * nd);
        const std::size_t t = (i / nd) % nt;
        const std::size_t d = i % nd;
        cells[i] = optics::computePsf(lens, depthSamples[d], thetaSamples[t], optics::kChannelWavelengths[c], options);
    });
    for (std::size_t i = 0; i < cells.size(); ++i) {
        tensor.set(static_cast<int>(i / (nt * nd)), static_cast<int>((i / nd) % nt), static_cast<int>(i % nd),
                   std::move(cells[i]));
    }
    return tensor;
}

PsfTensor deltaPsfTensor(const std::vector<double> &thetaSamples, const std::vector<double> &depthSamples, int side,
                         double pitchUm) {
    PsfTensor tensor(thetaSamples, depthSamples, 3);
    for (int c = 0; c < 3; ++c) {
        for (std::size_t t = 0; t < thetaSamples.size(); ++t) {
            for (std::size_t d = 0; d < depthSamples.size(); ++d) {
                optics::PsfGrid g(side, pitchUm);
                g.at(side / 2, side / 2) = 1.0;
                g.wavelength = optics::kChannelWavelengths[c];
                g.fieldAngle = thetaSamples[t];
                g.depth = depthSamples[d];
                tensor.set(c, static_cast<int>(t), static_cast<int>(d), std::move(g));
            }
        }
    }
    return tensor;
}

} // namespace bmi::psfmap
