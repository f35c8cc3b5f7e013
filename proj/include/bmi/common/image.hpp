#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bmi {

/// Planar multi-channel image of doubles. Channel c occupies a contiguous
/// height*width block; pixels are row-major within a plane.
class Image {
  public:
    Image() = default;
    Image(int width, int height, int channels = 1, double fill = 0.0);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    std::size_t planeSize() const { return static_cast<std::size_t>(width_) * height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double &at(int c, int y, int x) { return data_[index(c, y, x)]; }
    double at(int c, int y, int x) const { return data_[index(c, y, x)]; }
    double &operator()(int y, int x) { return data_[index(0, y, x)]; }
    double operator()(int y, int x) const { return data_[index(0, y, x)]; }

    std::span<double> plane(int c);
    std::span<const double> plane(int c) const;
    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    /// Copy of a single channel as a one-channel image.
    Image channel(int c) const;
    void setChannel(int c, const Image &src);

    bool sameShape(const Image &other) const {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }

  private:
    std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

} // namespace bmi
