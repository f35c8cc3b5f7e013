#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace bmi::pipeline {

enum class Split { Train, Val, Test };

struct ManifestItem {
    std::filesystem::path rgb;
    std::filesystem::path depth;
    std::string sceneId;
};

/// {"split": "test", "items": [{"rgb": ..., "depth": ..., "scene_id": ...}]}
/// Relative paths resolve against the manifest's directory. Scene ids must
/// be unique and usable as file-name stems.
struct DatasetManifest {
    Split split = Split::Test;
    std::vector<ManifestItem> items;

    static DatasetManifest load(const std::filesystem::path &path);
};

std::string splitName(Split split);

} // namespace bmi::pipeline
