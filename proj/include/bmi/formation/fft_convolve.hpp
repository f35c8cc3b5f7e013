#pragma once

#include <bmi/common/fft.hpp>
#include <bmi/common/image.hpp>
#include <bmi/formation/kernel.hpp>

namespace bmi::formation {

/// Linear convolution of a tile padded by `pad` pixels on every side.
/// Returns the (H - 2 pad) x (W - 2 pad) interior, which equals direct
/// spatial convolution of the padded tile. Requires pad >= kernel.radius()
/// and a kernel no larger than the padded tile.
Image fftConvolve(const Image &paddedTile, const Kernel &kernel, int pad);

/// Reusable circular convolution workspace of a fixed rows x cols size.
/// Inputs are real arrays of that size; results are the circular convolution
/// with the kernel anchored at the origin.
class FftWorkspace {
  public:
    FftWorkspace(int rows, int cols);

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    /// Real scratch of rows*cols, zeroed by clearInput().
    fft::RealBuffer &input() { return input_; }
    void clearInput();

    /// Spectrum of the current input.
    void transformInput(fft::ComplexBuffer &spectrum);
    /// Spectrum of a kernel wrapped around the origin.
    void transformKernel(const Kernel &kernel, fft::ComplexBuffer &spectrum);
    /// inverse(a .* b) / (rows*cols) written into out.
    void multiplyInverse(const fft::ComplexBuffer &a, const fft::ComplexBuffer &b, fft::RealBuffer &out);

    fft::ComplexBuffer makeSpectrum() const { return fft::ComplexBuffer(fft::halfSpectrumSize(rows_, cols_)); }
    fft::RealBuffer makeReal() const { return fft::RealBuffer(static_cast<std::size_t>(rows_) * cols_); }

  private:
    int rows_;
    int cols_;
    fft::RealBuffer input_;
    fft::ComplexBuffer product_;
};

} // namespace bmi::formation
