#include <bmi/formation/composite.hpp>

#include <bmi/common/error.hpp>

#include <cmath>
#include <numbers>

namespace bmi::formation {

namespace {

// SplitMix64 finaliser used as a counter-based generator.
std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Uniform in (0, 1].
double uniform(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53; }

} // namespace

Image addGaussianNoise(const Image &image, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw ValidationError("noise sigma must be non-negative");
    Image out = image;
    if (sigma == 0.0) return out;
    const std::uint64_t key = mix(seed);
    auto data = out.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::uint64_t counter = key ^ mix(2 * static_cast<std::uint64_t>(i));
        const double u1 = uniform(mix(counter));
        const double u2 = uniform(mix(counter + 1));
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        data[i] += sigma * z;
    }
    return out;
}

} // namespace bmi::formation
