#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace bmi::optics {

/// Design wavelengths (nm) of the R, G and B channels: Fraunhofer C, d and F lines.
inline constexpr double kWavelengthRed = 656.3;
inline constexpr double kWavelengthGreen = 587.6;
inline constexpr double kWavelengthBlue = 486.1;
inline constexpr double kChannelWavelengths[3] = {kWavelengthRed, kWavelengthGreen, kWavelengthBlue};

class GlassMaterial {
  public:
    GlassMaterial() = default;
    GlassMaterial(std::string name, std::map<double, double> indexByWavelength);

    /// Unit-index medium used for "air" and empty material cells.
    static GlassMaterial air();

    const std::string &name() const { return name_; }
    const std::map<double, double> &indices() const { return indexByWavelength_; }
    bool isAir() const { return air_; }

    /// Index at a tabulated wavelength (matched to within 0.05 nm).
    /// Throws OutOfRangeError for wavelengths the catalog does not carry.
    double index(double wavelengthNm) const;

  private:
    std::string name_;
    std::map<double, double> indexByWavelength_;
    bool air_ = false;
};

/// Name-keyed collection loaded from the JSON catalog file
/// { name: { "486.1": n, "587.6": n, "656.3": n } }.
class MaterialCatalog {
  public:
    static MaterialCatalog load(const std::filesystem::path &path);
    static MaterialCatalog fromJsonText(std::string_view text);

    void add(GlassMaterial material);
    bool contains(std::string_view name) const;
    /// "air" and "" resolve to GlassMaterial::air().
    const GlassMaterial &get(std::string_view name) const;
    std::size_t size() const { return materials_.size(); }

  private:
    std::map<std::string, GlassMaterial, std::less<>> materials_;
};

} // namespace bmi::optics
