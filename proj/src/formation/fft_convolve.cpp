#include <bmi/formation/fft_convolve.hpp>

#include <bmi/common/error.hpp>

#include <algorithm>
#include <cmath>

namespace bmi::formation {

Kernel::Kernel(int side_, std::vector<double> taps_) : side(side_), taps(std::move(taps_)) {
    if (side <= 0 || taps.size() != static_cast<std::size_t>(side) * side) {
        throw ValidationError("kernel taps do not match its side length");
    }
}

Kernel Kernel::fromPsf(const optics::PsfGrid &grid) { return Kernel(grid.side, grid.samples); }

Kernel Kernel::fromFloats(int side, std::span<const float> taps) {
    return Kernel(side, std::vector<double>(taps.begin(), taps.end()));
}

Kernel Kernel::delta() { return Kernel(1, {1.0}); }

UniformPsfProvider::UniformPsfProvider(std::vector<std::vector<Kernel>> kernels) : kernels_(std::move(kernels)) {
    if (kernels_.empty() || kernels_.front().empty()) throw ValidationError("no kernels supplied");
    for (const auto &perChannel : kernels_) {
        if (perChannel.size() != kernels_.front().size()) throw ValidationError("kernel layer counts differ");
        for (const auto &k : perChannel) maxRadius_ = std::max(maxRadius_, k.radius());
    }
}

UniformPsfProvider::UniformPsfProvider(Kernel kernel, int channels, int layers)
    : UniformPsfProvider(std::vector<std::vector<Kernel>>(channels, std::vector<Kernel>(layers, kernel))) {}

int UniformPsfProvider::layerCount() const { return static_cast<int>(kernels_.front().size()); }

Kernel UniformPsfProvider::kernel(int channel, int layer, int, int) const {
    return kernels_.at(static_cast<std::size_t>(channel)).at(static_cast<std::size_t>(layer));
}

FftWorkspace::FftWorkspace(int rows, int cols)
    : rows_(rows), cols_(cols), input_(static_cast<std::size_t>(rows) * cols),
      product_(fft::halfSpectrumSize(rows, cols)) {}

void FftWorkspace::clearInput() { std::fill_n(input_.data(), input_.size(), 0.0); }

void FftWorkspace::transformInput(fft::ComplexBuffer &spectrum) { fft::forwardReal(rows_, cols_, input_, spectrum); }

void FftWorkspace::transformKernel(const Kernel &kernel, fft::ComplexBuffer &spectrum) {
    if (kernel.side > rows_ || kernel.side > cols_) throw ConfigError("kernel larger than the FFT tile");
    clearInput();
    const int a = kernel.anchor();
    for (int i = 0; i < kernel.side; ++i) {
        const int r = ((i - a) % rows_ + rows_) % rows_;
        for (int j = 0; j < kernel.side; ++j) {
            const int c = ((j - a) % cols_ + cols_) % cols_;
            input_[static_cast<std::size_t>(r) * cols_ + c] += kernel.at(i, j);
        }
    }
    fft::forwardReal(rows_, cols_, input_, spectrum);
}

void FftWorkspace::multiplyInverse(const fft::ComplexBuffer &a, const fft::ComplexBuffer &b, fft::RealBuffer &out) {
    const double scale = 1.0 / (static_cast<double>(rows_) * cols_);
    for (std::size_t i = 0; i < product_.size(); ++i) product_[i] = a[i] * b[i] * scale;
    fft::inverseReal(rows_, cols_, product_, out);
}

namespace {

void checkGeometry(const Image &tile, const Kernel &kernel, int pad) {
    if (tile.channels() != 1) throw ValidationError("convolution expects a single-channel tile");
    if (kernel.side > tile.width() || kernel.side > tile.height()) {
        throw ConfigError("kernel larger than the padded tile");
    }
    if (pad < kernel.radius()) throw ConfigError("tile padding smaller than the kernel radius");
    if (tile.width() <= 2 * pad || tile.height() <= 2 * pad) throw ConfigError("padding leaves no valid region");
}

} // namespace

Image fftConvolve(const Image &paddedTile, const Kernel &kernel, int pad) {
    checkGeometry(paddedTile, kernel, pad);
    const int rows = fft::goodSize(paddedTile.height());
    const int cols = fft::goodSize(paddedTile.width());
    FftWorkspace ws(rows, cols);
    auto kernelSpectrum = ws.makeSpectrum();
    ws.transformKernel(kernel, kernelSpectrum);

    ws.clearInput();
    for (int y = 0; y < paddedTile.height(); ++y) {
        for (int x = 0; x < paddedTile.width(); ++x) {
            ws.input()[static_cast<std::size_t>(y) * cols + x] = paddedTile(y, x);
        }
    }
    auto spectrum = ws.makeSpectrum();
    ws.transformInput(spectrum);
    auto result = ws.makeReal();
    ws.multiplyInverse(spectrum, kernelSpectrum, result);

    Image out(paddedTile.width() - 2 * pad, paddedTile.height() - 2 * pad, 1);
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            out(y, x) = result[static_cast<std::size_t>(y + pad) * cols + (x + pad)];
        }
    }
    return out;
}

} // namespace bmi::formation
