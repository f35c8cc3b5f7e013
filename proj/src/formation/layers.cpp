#include <bmi/formation/layers.hpp>

#include <bmi/common/error.hpp>

#include <cmath>

namespace bmi::formation {

void RenderConfig::validate() const {
    if (tileSize <= 0) throw ConfigError("tile size must be positive");
    if (patchSize <= 0) throw ConfigError("patch size must be positive");
    if (!(noiseSigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
    depthGrid.count();
}

DepthLayerStack::DepthLayerStack(Image content, std::vector<std::int32_t> labels, std::vector<double> layerDepths)
    : content_(std::move(content)), labels_(std::move(labels)), depths_(std::move(layerDepths)) {
    if (labels_.size() != content_.planeSize()) throw ValidationError("layer labels do not match image size");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        const auto k = labels_[i];
        if (k < kNoLayer || k >= layerCount()) throw ValidationError("layer label out of range");
        if (k == kNoLayer) {
            for (int c = 0; c < content_.channels(); ++c) {
                if (content_.plane(c)[i] != 0.0) throw ValidationError("content outside every layer mask");
            }
        }
    }
}

DepthLayerStack DepthLayerStack::fromLayers(const std::vector<Image> &images, const std::vector<Image> &masks,
                                            std::vector<double> layerDepths) {
    if (images.empty() || images.size() != masks.size() || images.size() != layerDepths.size()) {
        throw ValidationError("layer images, masks and depths must have equal non-zero counts");
    }
    const Image &first = images.front();
    Image content(first.width(), first.height(), first.channels());
    std::vector<std::int32_t> labels(first.planeSize(), kNoLayer);
    for (std::size_t k = 0; k < images.size(); ++k) {
        const Image &img = images[k];
        const Image &mask = masks[k];
        if (!img.sameShape(first) || mask.width() != first.width() || mask.height() != first.height() ||
            mask.channels() != 1) {
            throw ValidationError("layer shapes differ");
        }
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const double a = mask.data()[i];
            if (a != 0.0 && a != 1.0) throw ValidationError("alpha masks must be binary");
            if (a == 1.0) {
                if (labels[i] != kNoLayer) throw ValidationError("alpha masks overlap");
                labels[i] = static_cast<std::int32_t>(k);
                for (int c = 0; c < img.channels(); ++c) content.plane(c)[i] = img.plane(c)[i];
            } else {
                for (int c = 0; c < img.channels(); ++c) {
                    if (img.plane(c)[i] != 0.0) throw ValidationError("layer image nonzero outside its mask");
                }
            }
        }
    }
    return DepthLayerStack(std::move(content), std::move(labels), std::move(layerDepths));
}

Image DepthLayerStack::layerImage(int k) const {
    Image out(width(), height(), channels());
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] != k) continue;
        for (int c = 0; c < channels(); ++c) out.plane(c)[i] = content_.plane(c)[i];
    }
    return out;
}

Image DepthLayerStack::layerMask(int k) const {
    Image out(width(), height(), 1);
    for (std::size_t i = 0; i < labels_.size(); ++i) out.data()[i] = labels_[i] == k ? 1.0 : 0.0;
    return out;
}

int quantizeDepth(double depth, const psfmap::DepthGrid &grid) { return grid.nearestIndex(depth); }

DepthLayerStack layerize(const Image &rgb, const Image &depthMap, const RenderConfig &config) {
    if (rgb.width() != depthMap.width() || rgb.height() != depthMap.height() || depthMap.channels() != 1) {
        throw ValidationError("rgb and depth map differ in size");
    }
    const auto &grid = config.depthGrid;
    std::vector<std::int32_t> labels(depthMap.planeSize());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double d = depthMap.data()[i];
        if (!std::isfinite(d) || d <= 0.0) throw ValidationError("depth must be positive and finite");
        labels[i] = quantizeDepth(d, grid);
    }
    return DepthLayerStack(rgb, std::move(labels), grid.values());
}

} // namespace bmi::formation
