#include <bmi/common/image.hpp>

#include <bmi/common/error.hpp>

#include <algorithm>

namespace bmi {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
    if (width < 0 || height < 0 || channels < 0) {
        throw ValidationError("image dimensions must be non-negative");
    }
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

std::span<double> Image::plane(int c) {
    return std::span<double>(data_).subspan(static_cast<std::size_t>(c) * planeSize(), planeSize());
}

std::span<const double> Image::plane(int c) const {
    return std::span<const double>(data_).subspan(static_cast<std::size_t>(c) * planeSize(),
                                                  planeSize());
}

Image Image::channel(int c) const {
    Image out(width_, height_, 1);
    std::ranges::copy(plane(c), out.data_.begin());
    return out;
}

void Image::setChannel(int c, const Image &src) {
    if (src.width_ != width_ || src.height_ != height_ || src.channels_ != 1) {
        throw ValidationError("setChannel: shape mismatch");
    }
    std::ranges::copy(src.data_, plane(c).begin());
}

} // namespace bmi
