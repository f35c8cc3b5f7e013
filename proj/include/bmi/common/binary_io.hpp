#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <type_traits>

namespace bmi::binary {

template <class T> T byteswap(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

template <class T> void writeLE(std::ostream &out, T value) {
    if constexpr (std::endian::native == std::endian::big) value = byteswap(value);
    out.write(reinterpret_cast<const char *>(&value), sizeof(T));
}

template <class T> bool readLE(std::istream &in, T &value) {
    if (!in.read(reinterpret_cast<char *>(&value), sizeof(T))) return false;
    if constexpr (std::endian::native == std::endian::big) value = byteswap(value);
    return true;
}

template <class T> void writeArrayLE(std::ostream &out, const T *values, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char *>(values), static_cast<std::streamsize>(sizeof(T) * count));
    } else {
        for (std::size_t i = 0; i < count; ++i) writeLE(out, values[i]);
    }
}

template <class T> bool readArrayLE(std::istream &in, T *values, std::size_t count) {
    if (!in.read(reinterpret_cast<char *>(values), static_cast<std::streamsize>(sizeof(T) * count))) return false;
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t i = 0; i < count; ++i) values[i] = byteswap(values[i]);
    }
    return true;
}

} // namespace bmi::binary
