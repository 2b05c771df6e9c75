#pragma once

#include "previs/geometry.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace previs {

inline constexpr int kSceneSchemaVersion = 1;

enum class NodeKind { Scene, Room, Object, SpawnPoint };
std::string_view to_string(NodeKind k);

struct SceneNode {
  std::string id;
  NodeKind kind = NodeKind::Object;
  Vec3 position = Vec3::Zero();      // relative to parent
  Vec3 half_extents = Vec3::Zero();  // axis-aligned box, meters
  std::vector<std::string> children;
  std::string character;  // spawn points may name the character they seat
  double facing_rad = 0.0;
};

/// Immutable scene tree. Node positions in the document are local to the
/// parent; world positions are composed at load.
class SceneGraph {
 public:
  SceneGraph() = default;
  SceneGraph(std::string id, std::vector<SceneNode> nodes);

  const std::string& id() const { return id_; }
  const std::vector<SceneNode>& nodes() const { return nodes_; }
  const SceneNode& root() const { return nodes_[root_]; }
  const SceneNode* find(std::string_view id) const;
  const SceneNode* parent(std::string_view id) const;
  Vec3 world_position(std::string_view id) const;

  /// Spawn point seated for `character`, if the scene declares one.
  const SceneNode* spawn_for(std::string_view character) const;

 private:
  std::string id_;
  std::vector<SceneNode> nodes_;
  std::size_t root_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::optional<std::size_t>> parent_;
  std::vector<Vec3> world_;
};

SceneGraph parse_scene(const nlohmann::json& doc);
SceneGraph load_scene(const std::filesystem::path& file);
nlohmann::json scene_to_json(const SceneGraph& scene);

/// World position of a node, composing local offsets from root to node.
Vec3 resolve_target(const SceneGraph& scene, std::string_view target_ref);

}  // namespace previs
