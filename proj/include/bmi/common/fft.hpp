#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace bmi::fft {

/// SIMD-aligned scratch array owned by FFTW's allocator. Every transform in
/// the engine runs on these so that cached plans see a fixed alignment.
template <class T> class AlignedBuffer {
  public:
    AlignedBuffer() = default;
    explicit AlignedBuffer(std::size_t count);

    T *data() { return data_.get(); }
    const T *data() const { return data_.get(); }
    std::size_t size() const { return size_; }
    std::span<T> span() { return {data_.get(), size_}; }
    std::span<const T> span() const { return {data_.get(), size_}; }
    T &operator[](std::size_t i) { return data_[i]; }
    const T &operator[](std::size_t i) const { return data_[i]; }

  private:
    struct Free {
        void operator()(T *p) const;
    };
    std::unique_ptr<T[], Free> data_;
    std::size_t size_ = 0;
};

using RealBuffer = AlignedBuffer<double>;
using ComplexBuffer = AlignedBuffer<std::complex<double>>;

/// Number of complex bins of a real-to-complex transform of a rows x cols array.
inline std::size_t halfSpectrumSize(int rows, int cols) {
    return static_cast<std::size_t>(rows) * (cols / 2 + 1);
}

/// Unnormalised 2-D real-to-complex transform (half spectrum, row-major).
void forwardReal(int rows, int cols, RealBuffer &in, ComplexBuffer &out);
/// Unnormalised inverse of forwardReal; destroys `in`.
void inverseReal(int rows, int cols, ComplexBuffer &in, RealBuffer &out);
/// Unnormalised full complex 2-D forward transform.
void forwardComplex(int rows, int cols, ComplexBuffer &in, ComplexBuffer &out);

/// Smallest size >= n whose only prime factors are 2, 3 and 5.
int goodSize(int n);

} // namespace bmi::fft
