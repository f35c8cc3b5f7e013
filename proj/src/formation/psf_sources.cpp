#include <bmi/formation/psf_sources.hpp>

#include <bmi/common/error.hpp>

namespace bmi::formation {

CachePsfProvider::CachePsfProvider(std::shared_ptr<const psfmap::PsfCache> cache, psfmap::TileGrid tiles)
    : cache_(std::move(cache)), tiles_(tiles) {
    if (tiles_.rows() != cache_->header().tileRows || tiles_.cols() != cache_->header().tileCols) {
        throw ConfigError("PSF cache tile grid does not match the render tiling");
    }
}

Kernel CachePsfProvider::kernel(int channel, int layer, int centerRow, int centerCol) const {
    const int tr = centerRow / tiles_.tileSize;
    const int tc = centerCol / tiles_.tileSize;
    if (tr >= tiles_.rows() || tc >= tiles_.cols() || tiles_.centerY(tr) != centerRow ||
        tiles_.centerX(tc) != centerCol) {
        throw OutOfRangeError("PSF cache only holds tile-centre kernels");
    }
    return Kernel::fromFloats(cache_->header().psfSide, cache_->record(channel, layer, tr, tc));
}

TensorPsfProvider::TensorPsfProvider(std::shared_ptr<const psfmap::PsfTensor> tensor, psfmap::SensorGeometry geometry)
    : tensor_(std::move(tensor)), geometry_(geometry) {
    const auto &g = tensor_->grid(0, 0, 0);
    radius_ = psfmap::resizedSide(g.side, g.pitchUm, geometry_.pixelPitchUm) / 2;
}

Kernel TensorPsfProvider::kernel(int channel, int layer, int centerRow, int centerCol) const {
    const auto key = std::make_tuple(channel, layer, centerRow, centerCol);
    {
        std::lock_guard lock(mutex_);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }
    Kernel k = Kernel::fromPsf(psfmap::psfAtIndex(*tensor_, geometry_, channel, centerRow, centerCol, layer));
    std::lock_guard lock(mutex_);
    return memo_.emplace(key, std::move(k)).first->second;
}

} // namespace bmi::formation
