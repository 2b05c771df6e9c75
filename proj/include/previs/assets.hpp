#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace previs {

inline constexpr int kRegistrySchemaVersion = 1;

struct CharacterAsset {
  double height_m = 1.6;
  double capsule_radius_m = 0.25;
};

struct VerbAsset {
  std::vector<std::string> clips;  // clip-pool keys
  bool locomotion = false;
  bool requires_target = false;  // locomotion or object interaction
};

/// Characters, verbs and scenes known to the studio. Scene entries map a scene
/// id to its document path (relative paths resolve against `root`).
struct AssetRegistry {
  std::map<std::string, CharacterAsset, std::less<>> characters;
  std::map<std::string, VerbAsset, std::less<>> verbs;
  std::map<std::string, std::string, std::less<>> scenes;
  std::string clip_pool = "clips.json";
  std::filesystem::path root;

  std::filesystem::path scene_path(const std::string& scene_id) const;
  std::filesystem::path clip_pool_path() const;
};

AssetRegistry parse_registry(const nlohmann::json& doc, std::filesystem::path root = {});
AssetRegistry load_registry(const std::filesystem::path& file);

}  // namespace previs
