#include <bmi/optics/material.hpp>

#include <bmi/common/error.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace bmi::optics {

namespace {

bool isAirName(std::string_view name) { return name.empty() || name == "air" || name == "AIR" || name == "-"; }

} // namespace

GlassMaterial::GlassMaterial(std::string name, std::map<double, double> indexByWavelength)
    : name_(std::move(name)), indexByWavelength_(std::move(indexByWavelength)) {
    for (const auto &[wl, n] : indexByWavelength_) {
        if (!(n > 1.0 && n < 3.0)) {
            std::ostringstream msg;
            msg << "material " << name_ << ": index " << n << " at " << wl << " nm outside (1, 3)";
            throw ValidationError(msg.str());
        }
    }
    for (double wl : kChannelWavelengths) {
        bool found = false;
        for (const auto &entry : indexByWavelength_) found |= std::abs(entry.first - wl) < 0.05;
        if (!found) {
            std::ostringstream msg;
            msg << "material " << name_ << " lacks design wavelength " << wl << " nm";
            throw ValidationError(msg.str());
        }
    }
}

GlassMaterial GlassMaterial::air() {
    GlassMaterial m;
    m.name_ = "air";
    m.air_ = true;
    return m;
}

double GlassMaterial::index(double wavelengthNm) const {
    if (air_) return 1.0;
    for (const auto &[wl, n] : indexByWavelength_) {
        if (std::abs(wl - wavelengthNm) < 0.05) return n;
    }
    std::ostringstream msg;
    msg << "material " << name_ << " has no index at " << wavelengthNm << " nm";
    throw OutOfRangeError(msg.str());
}

MaterialCatalog MaterialCatalog::load(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open material catalog: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return fromJsonText(buffer.str());
    } catch (const Error &e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

MaterialCatalog MaterialCatalog::fromJsonText(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception &e) {
        throw ParseError(std::string("material catalog: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("material catalog must be a JSON object");

    MaterialCatalog catalog;
    for (const auto &[name, table] : doc.items()) {
        if (!table.is_object()) throw ParseError("material " + name + ": expected wavelength map");
        std::map<double, double> indices;
        for (const auto &[key, value] : table.items()) {
            double wl = 0.0;
            try {
                wl = std::stod(key);
            } catch (const std::exception &) {
                throw ParseError("material " + name + ": bad wavelength key '" + key + "'");
            }
            if (!value.is_number()) throw ParseError("material " + name + ": index must be a number");
            indices[wl] = value.get<double>();
        }
        catalog.add(GlassMaterial(name, std::move(indices)));
    }
    return catalog;
}

void MaterialCatalog::add(GlassMaterial material) {
    std::string key = material.name();
    materials_.insert_or_assign(std::move(key), std::move(material));
}

bool MaterialCatalog::contains(std::string_view name) const {
    return isAirName(name) || materials_.find(name) != materials_.end();
}

const GlassMaterial &MaterialCatalog::get(std::string_view name) const {
    static const GlassMaterial kAir = GlassMaterial::air();
    if (isAirName(name)) return kAir;
    auto it = materials_.find(name);
    if (it == materials_.end()) throw ValidationError("unknown material: " + std::string(name));
    return it->second;
}

} // namespace bmi::optics
