#include <bmi/optics/prescription.hpp>

#include <bmi/common/error.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace bmi::optics {

std::string_view toString(SurfaceKind kind) {
    switch (kind) {
    case SurfaceKind::Sphere: return "sphere";
    case SurfaceKind::Stop: return "stop";
    case SurfaceKind::EvenAsphere: return "even_asphere";
    }
    return "unknown";
}

double Surface::sag(double r) const {
    const double r2 = r * r;
    double z = 0.0;
    if (!isPlanar()) {
        const double c = curvature();
        z = c * r2 / (1.0 + std::sqrt(std::max(0.0, 1.0 - c * c * r2)));
    }
    const double r4 = r2 * r2;
    z += r4 * (asphere[0] + r2 * (asphere[1] + r2 * (asphere[2] + r2 * asphere[3])));
    return z;
}

double Surface::sagSlope(double r) const {
    const double r2 = r * r;
    double s = 0.0;
    if (!isPlanar()) {
        const double c = curvature();
        s = c * r / std::sqrt(std::max(1e-300, 1.0 - c * c * r2));
    }
    const double r3 = r2 * r;
    s += r3 * (4.0 * asphere[0] + r2 * (6.0 * asphere[1] + r2 * (8.0 * asphere[2] + r2 * 10.0 * asphere[3])));
    return s;
}

LensPrescription::LensPrescription(std::string name, std::vector<Surface> surfaces, Sensor sensor,
                                   double entranceSemiDiameter)
    : name_(std::move(name)), surfaces_(std::move(surfaces)), sensor_(sensor),
      entranceSemiDiameter_(entranceSemiDiameter) {
    if (surfaces_.empty()) throw ValidationError("prescription " + name_ + " has no surfaces");
    if (!(entranceSemiDiameter_ > 0.0)) {
        throw ValidationError("prescription " + name_ + ": entrance semi-diameter must be positive");
    }

    bool haveStop = false;
    vertexZ_.reserve(surfaces_.size() + 1);
    double z = 0.0;
    for (std::size_t i = 0; i < surfaces_.size(); ++i) {
        const Surface &s = surfaces_[i];
        std::ostringstream where;
        where << "prescription " << name_ << ", surface " << (i + 1) << ": ";
        if (s.thickness < 0.0) throw ValidationError(where.str() + "negative thickness");
        if (!(s.thickness > 0.0)) throw ValidationError(where.str() + "non-increasing axial position");
        if (!(s.semiDiameter > 0.0)) throw ValidationError(where.str() + "semi-diameter must be positive");
        if (s.radius == 0.0) throw ValidationError(where.str() + "zero radius");
        if (s.kind == SurfaceKind::Stop) {
            if (mediumBefore(i).name() != s.material.name()) {
                throw ValidationError(where.str() + "stop must not change the medium");
            }
            if (!haveStop) stopIndex_ = i;
            haveStop = true;
        }
        vertexZ_.push_back(z);
        z += s.thickness;
    }
    vertexZ_.push_back(z);
    if (!haveStop) throw ValidationError("prescription " + name_ + " has no stop surface");
}

const GlassMaterial &LensPrescription::mediumBefore(std::size_t i) const {
    static const GlassMaterial kAir = GlassMaterial::air();
    return i == 0 ? kAir : surfaces_.at(i - 1).material;
}

namespace {

double readRadius(const nlohmann::json &node, const std::string &key, const std::string &where) {
    if (!node.contains(key) || node.at(key).is_null()) return kInfiniteRadius;
    const auto &v = node.at(key);
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "infinity" || s == "Infinity" || s == "inf") return kInfiniteRadius;
        throw ParseError(where + key + " must be a number or null");
    }
    if (!v.is_number()) throw ParseError(where + key + " must be a number or null");
    return v.get<double>();
}

double readNumber(const nlohmann::json &node, const std::string &key, const std::string &where) {
    if (!node.contains(key) || !node.at(key).is_number()) {
        throw ParseError(where + "missing numeric field '" + key + "'");
    }
    return node.at(key).get<double>();
}

} // namespace

LensPrescription parsePrescription(std::string_view jsonText, const MaterialCatalog &catalog) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(jsonText);
    } catch (const nlohmann::json::exception &e) {
        throw ParseError(std::string("prescription: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("prescription must be a JSON object");
    const std::string name = doc.value("name", std::string("unnamed"));
    if (!doc.contains("surfaces") || !doc["surfaces"].is_array()) {
        throw ParseError("prescription " + name + ": 'surfaces' array required");
    }
    if (doc["surfaces"].empty()) throw ParseError("prescription " + name + ": empty surface list");

    std::vector<Surface> surfaces;
    int index = 0;
    for (const auto &node : doc["surfaces"]) {
        ++index;
        const std::string where = "prescription " + name + ", surface " + std::to_string(index) + ": ";
        if (!node.is_object()) throw ParseError(where + "expected object");
        Surface s;
        const std::string kind = node.value("kind", std::string("sphere"));
        if (kind == "sphere") s.kind = SurfaceKind::Sphere;
        else if (kind == "stop") s.kind = SurfaceKind::Stop;
        else if (kind == "even_asphere") s.kind = SurfaceKind::EvenAsphere;
        else throw ParseError(where + "unknown surface kind '" + kind + "'");

        s.radius = readRadius(node, "radius_mm", where);
        s.thickness = readNumber(node, "thickness_mm", where);
        s.semiDiameter = readNumber(node, "semi_diameter_mm", where);
        std::string material;
        if (node.contains("material") && node["material"].is_string()) material = node["material"].get<std::string>();
        if (!catalog.contains(material)) throw ValidationError(where + "unknown material '" + material + "'");
        s.material = catalog.get(material);

        if (node.contains("asphere") && !node["asphere"].is_null()) {
            const auto &coeffs = node["asphere"];
            if (!coeffs.is_array() || coeffs.size() > 4) throw ParseError(where + "asphere must hold up to 4 numbers");
            for (std::size_t k = 0; k < coeffs.size(); ++k) {
                if (!coeffs[k].is_number()) throw ParseError(where + "asphere coefficients must be numbers");
                s.asphere[k] = coeffs[k].get<double>();
            }
        }
        if (s.kind != SurfaceKind::EvenAsphere) {
            for (double a : s.asphere) {
                if (a != 0.0) throw ValidationError(where + "asphere terms on a non-asphere surface");
            }
        }
        surfaces.push_back(std::move(s));
    }

    if (!doc.contains("sensor") || !doc["sensor"].is_object()) throw ParseError("prescription " + name + ": 'sensor' object required");
    Sensor sensor;
    sensor.radius = readRadius(doc["sensor"], "radius_mm", "prescription " + name + ", sensor: ");
    sensor.semiDiameter = readNumber(doc["sensor"], "semi_diameter_mm", "prescription " + name + ", sensor: ");
    const double entrance = readNumber(doc, "entrance_semi_diameter_mm", "prescription " + name + ": ");
    return LensPrescription(name, std::move(surfaces), sensor, entrance);
}

LensPrescription loadPrescription(const std::filesystem::path &path, const MaterialCatalog &catalog) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open prescription: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parsePrescription(buffer.str(), catalog);
}

} // namespace bmi::optics
