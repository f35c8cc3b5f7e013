#pragma once

#include <bmi/optics/psf.hpp>

#include <memory>
#include <span>
#include <vector>

namespace bmi::formation {

/// Square convolution kernel at sensor pitch. Tap (i, j) displaces energy by
/// (i - anchor, j - anchor) pixels, anchor = side / 2.
struct Kernel {
    int side = 1;
    std::vector<double> taps{1.0};

    Kernel() = default;
    Kernel(int side, std::vector<double> taps);
    static Kernel fromPsf(const optics::PsfGrid &grid);
    static Kernel fromFloats(int side, std::span<const float> taps);
    static Kernel delta();

    int anchor() const { return side / 2; }
    /// Largest displacement from the anchor.
    int radius() const { return side / 2; }
    double at(int i, int j) const { return taps[static_cast<std::size_t>(i) * side + j]; }
};

/// Source of per-layer kernels for a region centred on a sensor pixel.
class PsfProvider {
  public:
    virtual ~PsfProvider() = default;
    /// Number of depth layers the provider covers.
    virtual int layerCount() const = 0;
    /// Upper bound on Kernel::radius() over every kernel served.
    virtual int maxRadius() const = 0;
    virtual Kernel kernel(int channel, int layer, int centerRow, int centerCol) const = 0;
};

/// Same kernel everywhere on the sensor; one kernel per (channel, layer).
class UniformPsfProvider : public PsfProvider {
  public:
    /// kernels[channel][layer]
    explicit UniformPsfProvider(std::vector<std::vector<Kernel>> kernels);
    /// Identical kernel for all channels and layers.
    UniformPsfProvider(Kernel kernel, int channels, int layers);

    int layerCount() const override;
    int maxRadius() const override { return maxRadius_; }
    Kernel kernel(int channel, int layer, int centerRow, int centerCol) const override;

  private:
    std::vector<std::vector<Kernel>> kernels_;
    int maxRadius_ = 0;
};

} // namespace bmi::formation
