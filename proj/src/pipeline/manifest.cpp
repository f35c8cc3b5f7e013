#include <bmi/pipeline/manifest.hpp>

#include <bmi/common/error.hpp>

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>

namespace bmi::pipeline {

namespace fs = std::filesystem;

std::string splitName(Split split) {
    switch (split) {
    case Split::Train:
        return "train";
    case Split::Val:
        return "val";
    case Split::Test:
        return "test";
    }
    return "test";
}

DatasetManifest DatasetManifest::load(const fs::path &path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception &e) {
        throw ParseError("manifest " + path.string() + ": " + e.what());
    }
    const fs::path base = fs::absolute(path).parent_path();

    DatasetManifest m;
    try {
        const std::string split = j.value("split", std::string("test"));
        if (split == "train") {
            m.split = Split::Train;
        } else if (split == "val") {
            m.split = Split::Val;
        } else if (split == "test") {
            m.split = Split::Test;
        } else {
            throw ParseError("manifest split must be train, val or test");
        }
        std::set<std::string> seen;
        for (const auto &item : j.at("items")) {
            ManifestItem it;
            it.rgb = (base / item.at("rgb").get<std::string>()).lexically_normal();
            it.depth = (base / item.at("depth").get<std::string>()).lexically_normal();
            it.sceneId = item.value("scene_id", it.rgb.stem().string());
            if (it.sceneId.empty() || it.sceneId.find_first_of("/\\") != std::string::npos) {
                throw ParseError("invalid scene id '" + it.sceneId + "'");
            }
            if (!seen.insert(it.sceneId).second) throw ParseError("duplicate scene id '" + it.sceneId + "'");
            m.items.push_back(std::move(it));
        }
    } catch (const nlohmann::json::exception &e) {
        throw ParseError("manifest " + path.string() + ": " + e.what());
    }
    return m;
}

} // namespace bmi::pipeline
