#pragma once

#include <bmi/common/image.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace bmi::pipeline {

struct PngData {
    int width = 0;
    int height = 0;
    int channels = 0; // 1 or 3, alpha dropped
    int bitDepth = 0; // 8 or 16
    std::vector<std::uint16_t> samples; // interleaved
};

PngData readPng(const std::filesystem::path &path);
void writePng(const std::filesystem::path &path, const PngData &png);

/// RGB in [0, 1]: samples divided by the format maximum, optionally passed
/// through the inverse sRGB transfer curve. Grayscale files are replicated.
Image readRgb(const std::filesystem::path &path, bool srgbDecode = false);

/// Clips to [0, 1] and quantises to 8 bits.
void writeRgb8(const std::filesystem::path &path, const Image &rgb);

/// Depth in metres from a 16-bit PNG in millimetres or a raw float32 file.
Image readDepth(const std::filesystem::path &path);
/// 16-bit PNG in millimetres; values are clamped to the 16-bit range.
void writeDepthPng(const std::filesystem::path &path, const Image &depthM);

/// Little-endian float32 with a two-int32 (width, height) header followed by
/// the planes in channel order. The channel count follows from the size.
Image readRawFloat(const std::filesystem::path &path);
void writeRawFloat(const std::filesystem::path &path, const Image &image);

/// Writes `bytes` next to `path` and renames it into place.
void writeFileAtomic(const std::filesystem::path &path, const std::vector<char> &bytes);

} // namespace bmi::pipeline
