#pragma once

#include <bmi/formation/kernel.hpp>
#include <bmi/psfmap/psf_cache.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace bmi::formation {

/// Serves tile-centre kernels from a PSF map cache. Only the centres of the
/// cache's tile grid may be queried.
class CachePsfProvider : public PsfProvider {
  public:
    CachePsfProvider(std::shared_ptr<const psfmap::PsfCache> cache, psfmap::TileGrid tiles);

    int layerCount() const override { return cache_->header().depths; }
    int maxRadius() const override { return cache_->header().psfSide / 2; }
    Kernel kernel(int channel, int layer, int centerRow, int centerCol) const override;

  private:
    std::shared_ptr<const psfmap::PsfCache> cache_;
    psfmap::TileGrid tiles_;
};

/// Evaluates psfAt on the fly from the PSF tensor, memoising results.
class TensorPsfProvider : public PsfProvider {
  public:
    TensorPsfProvider(std::shared_ptr<const psfmap::PsfTensor> tensor, psfmap::SensorGeometry geometry);

    int layerCount() const override { return static_cast<int>(tensor_->depthSamples().size()); }
    int maxRadius() const override { return radius_; }
    Kernel kernel(int channel, int layer, int centerRow, int centerCol) const override;

  private:
    std::shared_ptr<const psfmap::PsfTensor> tensor_;
    psfmap::SensorGeometry geometry_;
    int radius_ = 0;
    mutable std::mutex mutex_;
    mutable std::map<std::tuple<int, int, int, int>, Kernel> memo_;
};

} // namespace bmi::formation
