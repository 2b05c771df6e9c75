#include "previs/assets.hpp"

#include "previs/error.hpp"

#include <fstream>

namespace previs {

std::filesystem::path AssetRegistry::scene_path(const std::string& scene_id) const
{
  auto it = scenes.find(scene_id);
  if (it == scenes.end()) throw Error(ErrorCode::NotFound, "unknown scene '" + scene_id + "'");
  std::filesystem::path p = it->second;
  return p.is_absolute() ? p : root / p;
}

std::filesystem::path AssetRegistry::clip_pool_path() const
{
  std::filesystem::path p = clip_pool;
  return p.is_absolute() ? p : root / p;
}

AssetRegistry parse_registry(const nlohmann::json& doc, std::filesystem::path root)
{
  try {
    if (!doc.is_object()) throw Error(ErrorCode::Schema, "registry: expected an object");
    const int version = doc.at("schema_version").get<int>();
    if (version > kRegistrySchemaVersion)
      throw Error(ErrorCode::VersionMismatch,
                  "registry: schema_version " + std::to_string(version) + " is newer than supported");

    const auto characters = doc.value("characters", nlohmann::json::object());
    const auto verbs = doc.value("verbs", nlohmann::json::object());
    const auto scenes = doc.value("scenes", nlohmann::json::object());
    AssetRegistry reg;
    reg.root = std::move(root);
    for (const auto& [id, c] : characters.items()) {
      CharacterAsset asset;
      asset.height_m = c.value("height_m", 1.6);
      asset.capsule_radius_m = c.value("capsule_radius_m", 0.25);
      if (!(asset.height_m > 0.0))
        throw Error(ErrorCode::Schema, "registry: character '" + id + "' height must be > 0");
      if (asset.capsule_radius_m < 0.0 || 2.0 * asset.capsule_radius_m > asset.height_m)
        throw Error(ErrorCode::Schema, "registry: character '" + id + "' capsule radius out of range");
      reg.characters.emplace(id, asset);
    }
    for (const auto& [verb, v] : verbs.items()) {
      VerbAsset asset;
      asset.clips = v.value("clips", std::vector<std::string>{});
      asset.locomotion = v.value("locomotion", false);
      asset.requires_target = v.value("requires_target", asset.locomotion);
      if (asset.locomotion && !asset.requires_target)
        throw Error(ErrorCode::Schema, "registry: locomotion verb '" + verb + "' must take a target");
      reg.verbs.emplace(verb, std::move(asset));
    }
    for (const auto& [id, path] : scenes.items())
      reg.scenes.emplace(id, path.get<std::string>());
    reg.clip_pool = doc.value("clip_pool", reg.clip_pool);
    return reg;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("registry: ") + e.what());
  }
}

AssetRegistry load_registry(const std::filesystem::path& file)
{
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::Io, "cannot open registry " + file.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Schema, file.string() + ": " + e.what());
  }
  return parse_registry(doc, file.parent_path());
}

}  // namespace previs
