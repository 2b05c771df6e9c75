#include "previs/scene.hpp"

#include "previs/error.hpp"

#include <fstream>

namespace previs {

namespace {

NodeKind kind_from_string(const std::string& s)
{
  if (s == "scene") return NodeKind::Scene;
  if (s == "room") return NodeKind::Room;
  if (s == "object") return NodeKind::Object;
  if (s == "spawn_point") return NodeKind::SpawnPoint;
  throw Error(ErrorCode::Schema, "scene: unknown node kind '" + s + "'");
}

Vec3 vec3_from_json(const nlohmann::json& j, const char* what)
{
  if (!j.is_array() || j.size() != 3)
    throw Error(ErrorCode::Schema, std::string("scene: ") + what + " must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

nlohmann::json vec3_to_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

}  // namespace

std::string_view to_string(NodeKind k)
{
  switch (k) {
  case NodeKind::Scene: return "scene";
  case NodeKind::Room: return "room";
  case NodeKind::Object: return "object";
  case NodeKind::SpawnPoint: return "spawn_point";
  }
  return "object";
}

SceneGraph::SceneGraph(std::string id, std::vector<SceneNode> nodes)
    : id_(std::move(id)), nodes_(std::move(nodes))
{
  if (nodes_.empty()) throw Error(ErrorCode::Schema, "scene: no nodes");

  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.id.empty()) throw Error(ErrorCode::Schema, "scene: node with empty id");
    if ((n.half_extents.array() < 0.0).any())
      throw Error(ErrorCode::Schema, "scene: node '" + n.id + "' has negative half_extents");
    if (!index_.emplace(n.id, i).second)
      throw Error(ErrorCode::DuplicateId, "scene: duplicate node id '" + n.id + "'");
  }

  parent_.assign(nodes_.size(), std::nullopt);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (const auto& child : nodes_[i].children) {
      auto it = index_.find(child);
      if (it == index_.end())
        throw Error(ErrorCode::Schema, "scene: node '" + nodes_[i].id + "' lists unknown child '" + child + "'");
      if (it->second == i) throw Error(ErrorCode::CycleDetected, "scene: node '" + child + "' is its own child");
      if (parent_[it->second])
        throw Error(ErrorCode::CycleDetected, "scene: node '" + child + "' has more than one parent");
      parent_[it->second] = i;
    }
  }

  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (!parent_[i]) roots.push_back(i);
  if (roots.empty()) throw Error(ErrorCode::CycleDetected, "scene: no root (parent links form a cycle)");
  if (roots.size() > 1)
    throw Error(ErrorCode::Schema, "scene: multiple roots ('" + nodes_[roots[0]].id + "', '" +
                                       nodes_[roots[1]].id + "')");
  root_ = roots.front();

  // Walk from the root; anything unvisited hangs off a cycle.
  world_.assign(nodes_.size(), Vec3::Zero());
  std::vector<bool> seen(nodes_.size(), false);
  std::vector<std::size_t> stack{root_};
  world_[root_] = nodes_[root_].position;
  seen[root_] = true;
  std::size_t visited = 0;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    ++visited;
    for (const auto& child : nodes_[i].children) {
      const std::size_t c = index_.at(child);
      if (seen[c]) throw Error(ErrorCode::CycleDetected, "scene: cycle through '" + child + "'");
      seen[c] = true;
      world_[c] = world_[i] + nodes_[c].position;
      stack.push_back(c);
    }
  }
  if (visited != nodes_.size()) {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (!seen[i]) throw Error(ErrorCode::CycleDetected, "scene: cycle through '" + nodes_[i].id + "'");
  }
}

const SceneNode* SceneGraph::find(std::string_view id) const
{
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &nodes_[it->second];
}

const SceneNode* SceneGraph::parent(std::string_view id) const
{
  auto it = index_.find(std::string(id));
  if (it == index_.end() || !parent_[it->second]) return nullptr;
  return &nodes_[*parent_[it->second]];
}

Vec3 SceneGraph::world_position(std::string_view id) const
{
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw Error(ErrorCode::UnknownTarget, "unknown target '" + std::string(id) + "'");
  return world_[it->second];
}

const SceneNode* SceneGraph::spawn_for(std::string_view character) const
{
  for (const auto& n : nodes_)
    if (n.kind == NodeKind::SpawnPoint && n.character == character) return &n;
  return nullptr;
}

SceneGraph parse_scene(const nlohmann::json& doc)
{
  try {
    if (!doc.is_object()) throw Error(ErrorCode::Schema, "scene: expected an object");
    const int version = doc.at("schema_version").get<int>();
    if (version > kSceneSchemaVersion)
      throw Error(ErrorCode::VersionMismatch, "scene: schema_version " + std::to_string(version) + " unsupported");

    std::vector<SceneNode> nodes;
    for (const auto& jn : doc.at("nodes")) {
      SceneNode n;
      n.id = jn.at("id").get<std::string>();
      n.kind = kind_from_string(jn.at("kind").get<std::string>());
      n.position = vec3_from_json(jn.value("position", nlohmann::json::array({0, 0, 0})), "position");
      n.half_extents = vec3_from_json(jn.value("half_extents", nlohmann::json::array({0, 0, 0})), "half_extents");
      n.children = jn.value("children", std::vector<std::string>{});
      n.character = jn.value("character", std::string{});
      n.facing_rad = jn.value("facing_rad", 0.0);
      nodes.push_back(std::move(n));
    }
    return SceneGraph(doc.value("id", std::string{}), std::move(nodes));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("scene: ") + e.what());
  }
}

SceneGraph load_scene(const std::filesystem::path& file)
{
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::Io, "cannot open scene " + file.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Schema, file.string() + ": " + e.what());
  }
  return parse_scene(doc);
}

nlohmann::json scene_to_json(const SceneGraph& scene)
{
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : scene.nodes()) {
    nlohmann::json jn{{"id", n.id},
                      {"kind", to_string(n.kind)},
                      {"position", vec3_to_json(n.position)},
                      {"half_extents", vec3_to_json(n.half_extents)},
                      {"children", n.children}};
    if (!n.character.empty()) jn["character"] = n.character;
    if (n.facing_rad != 0.0) jn["facing_rad"] = n.facing_rad;
    nodes.push_back(std::move(jn));
  }
  return {{"schema_version", kSceneSchemaVersion}, {"id", scene.id()}, {"nodes", nodes}};
}

Vec3 resolve_target(const SceneGraph& scene, std::string_view target_ref)
{
  return scene.world_position(target_ref);
}

}  // namespace previs
