#pragma once

#include <bmi/psfmap/psf_map.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace bmi::psfmap {

inline constexpr std::array<char, 8> kCacheMagic = {'B', 'M', 'I', 'P', 'S', 'F', '1', '\0'};

/// Tile layout of the renderer: tiles of `tileSize` pixels, the last row and
/// column possibly partial.
struct TileGrid {
    int width = 0;
    int height = 0;
    int tileSize = 40;

    int rows() const { return (height + tileSize - 1) / tileSize; }
    int cols() const { return (width + tileSize - 1) / tileSize; }
    int y0(int row) const { return row * tileSize; }
    int x0(int col) const { return col * tileSize; }
    int y1(int row) const { return std::min(height, (row + 1) * tileSize); }
    int x1(int col) const { return std::min(width, (col + 1) * tileSize); }
    int centerY(int row) const { return (y0(row) + y1(row)) / 2; }
    int centerX(int col) const { return (x0(col) + x1(col)) / 2; }
};

struct CacheHeader {
    std::int32_t channels = 0;
    std::int32_t depths = 0;
    std::int32_t tileRows = 0;
    std::int32_t tileCols = 0;
    std::int32_t psfSide = 0;
    std::int32_t pitchNm = 0;

    std::size_t recordCount() const {
        return static_cast<std::size_t>(channels) * depths * tileRows * tileCols;
    }
    std::size_t recordSize() const { return static_cast<std::size_t>(psfSide) * psfSide; }
};

/// Tile-centre PSFs at sensor pitch, one record per (channel, depth, tile row,
/// tile col), stored as little-endian float32 after an 8-byte magic and six
/// little-endian int32 header fields.
class PsfCache {
  public:
    PsfCache(CacheHeader header, std::vector<float> records);

    static PsfCache load(const std::filesystem::path &path);
    void save(const std::filesystem::path &path) const;

    const CacheHeader &header() const { return header_; }
    std::span<const float> record(int channel, int depth, int tileRow, int tileCol) const;

  private:
    CacheHeader header_;
    std::vector<float> records_;
};

/// Evaluates psfAt at every tile centre for all channels and depths.
PsfCache buildPsfMapCache(const PsfTensor &tensor, const SensorGeometry &geometry, int tileSize);

/// Builds and writes the cache; the file is a pure function of the inputs.
void buildPsfMapCache(const PsfTensor &tensor, const SensorGeometry &geometry, int tileSize,
                      const std::filesystem::path &path);

} // namespace bmi::psfmap
