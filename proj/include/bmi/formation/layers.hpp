#pragma once

#include <bmi/common/image.hpp>
#include <bmi/psfmap/psf_tensor.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace bmi::formation {

struct RenderConfig {
    int tileSize = 40;
    int patchSize = 16;
    double noiseSigma = 0.005;
    std::uint64_t seed = 0;
    psfmap::DepthGrid depthGrid{};

    void validate() const;
};

/// Disjoint binary layers ordered far (k = 0) to near (k = K-1).
///
/// Because the masks are disjoint and I_k vanishes outside alpha_k, the stack
/// is held as a per-pixel layer label plus one content image; layerImage()
/// and layerMask() materialise individual I_k and alpha_k on demand.
class DepthLayerStack {
  public:
    static constexpr std::int32_t kNoLayer = -1;

    DepthLayerStack(Image content, std::vector<std::int32_t> labels, std::vector<double> layerDepths);

    /// Builds a stack from explicit (I_k, alpha_k) pairs, validating that the
    /// masks are binary and disjoint and that I_k is zero outside alpha_k.
    static DepthLayerStack fromLayers(const std::vector<Image> &images, const std::vector<Image> &masks,
                                      std::vector<double> layerDepths);

    int width() const { return content_.width(); }
    int height() const { return content_.height(); }
    int channels() const { return content_.channels(); }
    int layerCount() const { return static_cast<int>(depths_.size()); }
    double layerDepth(int k) const { return depths_.at(k); }
    const std::vector<double> &layerDepths() const { return depths_; }

    std::int32_t label(int y, int x) const { return labels_[static_cast<std::size_t>(y) * width() + x]; }
    const std::vector<std::int32_t> &labels() const { return labels_; }
    const Image &content() const { return content_; }

    Image layerImage(int k) const;
    Image layerMask(int k) const;

  private:
    Image content_;
    std::vector<std::int32_t> labels_;
    std::vector<double> depths_;
};

/// Layer index of a depth: clamp to the grid, then round half up.
int quantizeDepth(double depth, const psfmap::DepthGrid &grid);

/// Splits an RGB-D frame into the depth layers of config.depthGrid.
/// Throws ValidationError for non-positive or non-finite depth.
DepthLayerStack layerize(const Image &rgb, const Image &depthMap, const RenderConfig &config);

struct Provenance {
    std::string prescription;
    std::string configHash;
    std::uint64_t seed = 0;
};

/// Linear-intensity render result; values are not clipped.
struct CodedImage {
    Image pixels;
    Provenance provenance;
};

} // namespace bmi::formation
