#pragma once

#include <string>

#include <json.hpp>

#include "bevsim/events.hpp"
#include "bevsim/scene.hpp"

namespace bevsim {

// Scene files carry a schema version field "v": 1.
inline constexpr int kSceneSchemaVersion = 1;

nlohmann::json scene_to_json(const SceneConfig& scene);
SceneConfig scene_from_json(const nlohmann::json& j);

nlohmann::json trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const nlohmann::json& j);

nlohmann::json events_to_json(const EventLog& events);
EventLog events_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace bevsim
