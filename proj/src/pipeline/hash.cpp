#include <bmi/pipeline/hash.hpp>

#include <bmi/common/error.hpp>

#include <bit>
#include <cstdio>
#include <fstream>
#include <vector>

namespace bmi::pipeline {

Fnv1a &Fnv1a::bytes(const void *data, std::size_t size) {
    const auto *p = static_cast<const unsigned char *>(data);
    for (std::size_t i = 0; i < size; ++i) {
        state_ ^= p[i];
        state_ *= 0x100000001b3ULL;
    }
    return *this;
}

Fnv1a &Fnv1a::text(std::string_view s) {
    u64(s.size());
    return bytes(s.data(), s.size());
}

Fnv1a &Fnv1a::u64(std::uint64_t v) {
    unsigned char le[8];
    for (int i = 0; i < 8; ++i) le[i] = static_cast<unsigned char>(v >> (8 * i));
    return bytes(le, 8);
}

Fnv1a &Fnv1a::f64(double v) { return u64(std::bit_cast<std::uint64_t>(v)); }

std::uint64_t hashFile(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    Fnv1a h;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h.bytes(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return h.value();
}

std::string hexHash(std::uint64_t value) {
    char s[17];
    std::snprintf(s, sizeof s, "%016llx", static_cast<unsigned long long>(value));
    return s;
}

} // namespace bmi::pipeline
