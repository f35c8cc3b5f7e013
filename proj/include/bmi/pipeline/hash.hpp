#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace bmi::pipeline {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

/// Incremental 64-bit FNV-1a.
class Fnv1a {
  public:
    Fnv1a &bytes(const void *data, std::size_t size);
    Fnv1a &text(std::string_view s);
    /// Fixed-width little-endian encoding, independent of host byte order.
    Fnv1a &u64(std::uint64_t v);
    Fnv1a &f64(double v);
    std::uint64_t value() const { return state_; }

  private:
    std::uint64_t state_ = kFnvOffset;
};

std::uint64_t hashFile(const std::filesystem::path &path);
std::string hexHash(std::uint64_t value);

} // namespace bmi::pipeline
