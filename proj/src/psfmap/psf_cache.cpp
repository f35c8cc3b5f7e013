#include <bmi/psfmap/psf_cache.hpp>

#include <bmi/common/binary_io.hpp>
#include <bmi/common/error.hpp>
#include <bmi/common/parallel.hpp>

#include <fstream>

namespace bmi::psfmap {

PsfCache::PsfCache(CacheHeader header, std::vector<float> records)
    : header_(header), records_(std::move(records)) {
    if (records_.size() != header_.recordCount() * header_.recordSize()) {
        throw ValidationError("PSF cache payload does not match its header");
    }
}

std::span<const float> PsfCache::record(int channel, int depth, int tileRow, int tileCol) const {
    if (channel < 0 || channel >= header_.channels || depth < 0 || depth >= header_.depths || tileRow < 0 ||
        tileRow >= header_.tileRows || tileCol < 0 || tileCol >= header_.tileCols) {
        throw OutOfRangeError("PSF cache record index out of range");
    }
    const std::size_t index =
        ((static_cast<std::size_t>(channel) * header_.depths + depth) * header_.tileRows + tileRow) * header_.tileCols +
        tileCol;
    return std::span<const float>(records_).subspan(index * header_.recordSize(), header_.recordSize());
}

void PsfCache::save(const std::filesystem::path &path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write PSF cache: " + path.string());
    out.write(kCacheMagic.data(), kCacheMagic.size());
    for (std::int32_t v : {header_.channels, header_.depths, header_.tileRows, header_.tileCols, header_.psfSide,
                           header_.pitchNm}) {
        binary::writeLE(out, v);
    }
    binary::writeArrayLE(out, records_.data(), records_.size());
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

PsfCache PsfCache::load(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open PSF cache: " + path.string());
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kCacheMagic) {
        throw ParseError("not a PSF cache file: " + path.string());
    }
    CacheHeader h;
    for (std::int32_t *field : {&h.channels, &h.depths, &h.tileRows, &h.tileCols, &h.psfSide, &h.pitchNm}) {
        if (!binary::readLE(in, *field) || *field <= 0) throw ParseError("corrupt PSF cache header: " + path.string());
    }
    std::vector<float> records(h.recordCount() * h.recordSize());
    if (!binary::readArrayLE(in, records.data(), records.size())) {
        throw ParseError("truncated PSF cache: " + path.string());
    }
    return PsfCache(h, std::move(records));
}

PsfCache buildPsfMapCache(const PsfTensor &tensor, const SensorGeometry &geometry, int tileSize) {
    geometry.validate();
    if (!tensor.complete()) throw ValidationError("PSF tensor is incomplete");
    if (tileSize <= 0) throw ConfigError("tile size must be positive");

    const TileGrid tiles{geometry.width, geometry.height, tileSize};
    const auto &fine = tensor.grid(0, 0, 0);
    CacheHeader h;
    h.channels = tensor.channels();
    h.depths = static_cast<std::int32_t>(tensor.depthSamples().size());
    h.tileRows = tiles.rows();
    h.tileCols = tiles.cols();
    h.psfSide = resizedSide(fine.side, fine.pitchUm, geometry.pixelPitchUm);
    h.pitchNm = static_cast<std::int32_t>(std::lround(geometry.pixelPitchUm * 1000.0));

    const std::size_t perBlock = static_cast<std::size_t>(h.tileRows) * h.tileCols * h.recordSize();
    std::vector<float> records(h.recordCount() * h.recordSize());
    parallelFor(static_cast<std::size_t>(h.channels) * h.depths, [&](std::size_t block) {
        const int channel = static_cast<int>(block / h.depths);
        const int depth = static_cast<int>(block % h.depths);
        float *dst = records.data() + block * perBlock;
        for (int tr = 0; tr < h.tileRows; ++tr) {
            for (int tc = 0; tc < h.tileCols; ++tc) {
                const auto psf =
                    psfAtIndex(tensor, geometry, channel, tiles.centerY(tr), tiles.centerX(tc), depth);
                if (psf.side != h.psfSide) throw ValidationError("PSF tensor grids differ in size");
                for (double v : psf.samples) *dst++ = static_cast<float>(v);
            }
        }
    });
    return PsfCache(h, std::move(records));
}

void buildPsfMapCache(const PsfTensor &tensor, const SensorGeometry &geometry, int tileSize,
                      const std::filesystem::path &path) {
    buildPsfMapCache(tensor, geometry, tileSize).save(path);
}

} // namespace bmi::psfmap
