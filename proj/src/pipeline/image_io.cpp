#include <bmi/pipeline/image_io.hpp>

#include <bmi/common/binary_io.hpp>
#include <bmi/common/error.hpp>

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>

namespace bmi::pipeline {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
    void operator()(std::FILE *f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void pngError(png_structp png, png_const_charp message) {
    auto *buffer = static_cast<std::string *>(png_get_error_ptr(png));
    if (buffer) *buffer = message;
    png_longjmp(png, 1);
}

void pngWarning(png_structp, png_const_charp) {}

void appendToVector(png_structp png, png_bytep data, png_size_t length) {
    auto *out = static_cast<std::vector<char> *>(png_get_io_ptr(png));
    out->insert(out->end(), reinterpret_cast<const char *>(data), reinterpret_cast<const char *>(data) + length);
}

void noFlush(png_structp) {}

bool hasExtension(const fs::path &path, const char *ext) {
    std::string e = path.extension().string();
    std::ranges::transform(e, e.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return e == ext;
}

double srgbToLinear(double v) { return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4); }

} // namespace

PngData readPng(const fs::path &path) {
    FilePtr file(std::fopen(path.string().c_str(), "rb"));
    if (!file) throw IoError("cannot open " + path.string());
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        throw IoError("not a PNG file: " + path.string());
    }

    std::string message;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, pngError, pngWarning);
    if (!png) throw IoError("libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    PngData out;
    std::vector<png_bytep> rows;
    std::vector<unsigned char> pixels;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("cannot decode " + path.string() + ": " + message);
    }
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_set_expand(png); // palette, low-bit grey and tRNS to full samples
    png_set_strip_alpha(png);
    const int colorType = png_get_color_type(png, info);
    if (colorType == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    png_read_update_info(png, info);

    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.bitDepth = png_get_bit_depth(png, info);
    out.channels = png_get_channels(png, info);
    const std::size_t rowBytes = png_get_rowbytes(png, info);
    pixels.resize(rowBytes * out.height);
    rows.resize(out.height);
    for (int y = 0; y < out.height; ++y) rows[y] = pixels.data() + rowBytes * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    if (out.channels != 1 && out.channels != 3) throw IoError("unsupported channel layout in " + path.string());
    const std::size_t count = static_cast<std::size_t>(out.width) * out.height * out.channels;
    out.samples.resize(count);
    if (out.bitDepth == 16) {
        for (std::size_t i = 0; i < count; ++i) {
            out.samples[i] = static_cast<std::uint16_t>((pixels[2 * i] << 8) | pixels[2 * i + 1]);
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) out.samples[i] = pixels[i];
    }
    return out;
}

void writePng(const fs::path &path, const PngData &data) {
    if (data.bitDepth != 8 && data.bitDepth != 16) throw IoError("PNG bit depth must be 8 or 16");
    if (data.channels != 1 && data.channels != 3) throw IoError("PNG must have 1 or 3 channels");
    const std::size_t rowSamples = static_cast<std::size_t>(data.width) * data.channels;
    const std::size_t bytesPer = data.bitDepth / 8;
    std::vector<unsigned char> pixels(rowSamples * bytesPer * data.height);
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        if (bytesPer == 2) {
            pixels[2 * i] = static_cast<unsigned char>(data.samples[i] >> 8);
            pixels[2 * i + 1] = static_cast<unsigned char>(data.samples[i] & 0xff);
        } else {
            pixels[i] = static_cast<unsigned char>(data.samples[i]);
        }
    }
    std::vector<png_bytep> rows(data.height);
    for (int y = 0; y < data.height; ++y) rows[y] = pixels.data() + rowSamples * bytesPer * y;

    std::string message;
    std::vector<char> encoded;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, pngError, pngWarning);
    if (!png) throw IoError("libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("cannot encode " + path.string() + ": " + message);
    }
    png_set_write_fn(png, &encoded, appendToVector, noFlush);
    png_set_IHDR(png, info, data.width, data.height, data.bitDepth,
                 data.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    writeFileAtomic(path, encoded);
}

Image readRgb(const fs::path &path, bool srgbDecode) {
    const PngData png = readPng(path);
    const double scale = png.bitDepth == 16 ? 65535.0 : 255.0;
    Image out(png.width, png.height, 3);
    for (int y = 0; y < png.height; ++y) {
        for (int x = 0; x < png.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                const int src = png.channels == 3 ? c : 0;
                double v = png.samples[(static_cast<std::size_t>(y) * png.width + x) * png.channels + src] / scale;
                out.at(c, y, x) = srgbDecode ? srgbToLinear(v) : v;
            }
        }
    }
    return out;
}

void writeRgb8(const fs::path &path, const Image &rgb) {
    if (rgb.channels() != 3 && rgb.channels() != 1) throw ValidationError("expected a 1- or 3-channel image");
    PngData png{rgb.width(), rgb.height(), rgb.channels(), 8, {}};
    png.samples.resize(rgb.size());
    for (int y = 0; y < rgb.height(); ++y) {
        for (int x = 0; x < rgb.width(); ++x) {
            for (int c = 0; c < rgb.channels(); ++c) {
                const double v = std::clamp(rgb.at(c, y, x), 0.0, 1.0);
                png.samples[(static_cast<std::size_t>(y) * rgb.width() + x) * rgb.channels() + c] =
                    static_cast<std::uint16_t>(std::lround(v * 255.0));
            }
        }
    }
    writePng(path, png);
}

Image readDepth(const fs::path &path) {
    if (hasExtension(path, ".png")) {
        const PngData png = readPng(path);
        if (png.channels != 1 || png.bitDepth != 16) throw IoError("depth PNG must be 16-bit grayscale: " + path.string());
        Image out(png.width, png.height, 1);
        auto d = out.data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = png.samples[i] / 1000.0;
        return out;
    }
    Image out = readRawFloat(path);
    if (out.channels() != 1) throw IoError("raw depth must have one channel: " + path.string());
    return out;
}

void writeDepthPng(const fs::path &path, const Image &depthM) {
    if (depthM.channels() != 1) throw ValidationError("depth must be single-channel");
    PngData png{depthM.width(), depthM.height(), 1, 16, {}};
    png.samples.resize(depthM.size());
    const auto d = depthM.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double mm = std::isfinite(d[i]) ? std::clamp(d[i] * 1000.0, 0.0, 65535.0) : 0.0;
        png.samples[i] = static_cast<std::uint16_t>(std::lround(mm));
    }
    writePng(path, png);
}

Image readRawFloat(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::int32_t w = 0, h = 0;
    if (!binary::readLE(in, w) || !binary::readLE(in, h) || w <= 0 || h <= 0) {
        throw IoError("bad raw float header in " + path.string());
    }
    const auto size = fs::file_size(path);
    const std::uintmax_t plane = static_cast<std::uintmax_t>(w) * h * 4;
    if (size < 8 + plane || (size - 8) % plane != 0) throw IoError("raw float size mismatch in " + path.string());
    const int channels = static_cast<int>((size - 8) / plane);
    std::vector<float> values(static_cast<std::size_t>(w) * h * channels);
    binary::readArrayLE(in, values.data(), values.size());
    if (!in) throw IoError("truncated raw float file " + path.string());
    Image out(w, h, channels);
    std::ranges::copy(values, out.data().begin());
    return out;
}

void writeRawFloat(const fs::path &path, const Image &image) {
    std::ostringstream out(std::ios::binary);
    binary::writeLE(out, static_cast<std::int32_t>(image.width()));
    binary::writeLE(out, static_cast<std::int32_t>(image.height()));
    std::vector<float> values(image.data().begin(), image.data().end());
    binary::writeArrayLE(out, values.data(), values.size());
    const std::string s = out.str();
    writeFileAtomic(path, std::vector<char>(s.begin(), s.end()));
}

void writeFileAtomic(const fs::path &path, const std::vector<char> &bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

} // namespace bmi::pipeline
