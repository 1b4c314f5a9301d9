#include "bevsim/json_io.hpp"

#include <fstream>

#include "bevsim/errors.hpp"

namespace bevsim {

using nlohmann::json;

namespace {

json vec_to_json(const Vec2d& v) { return json::array({v.x, v.y}); }

Vec2d vec_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw DataError("expected [x, y] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

json scene_to_json(const SceneConfig& scene) {
  json j;
  j["v"] = kSceneSchemaVersion;
  j["physics"] = {{"g", scene.physics.g},
                  {"dt", scene.physics.dt},
                  {"substeps_per_frame", scene.physics.substeps_per_frame},
                  {"lambda1", scene.physics.lambda1},
                  {"lambda2", scene.physics.lambda2},
                  {"lambda3", scene.physics.lambda3},
                  {"lambda_omega", scene.physics.lambda_omega}};
  j["visibility"] = {{"min", vec_to_json(scene.visibility.min)},
                     {"max", vec_to_json(scene.visibility.max)}};
  j["walls"] = json::array();
  for (const auto& w : scene.walls) {
    j["walls"].push_back({{"a", vec_to_json(w.a)},
                          {"b", vec_to_json(w.b)},
                          {"restitution", w.restitution}});
  }
  j["bodies"] = json::array();
  for (const auto& b : scene.bodies) {
    json attrs = json::object();
    for (const auto& [k, v] : b.params.attributes) attrs[k] = v;
    j["bodies"].push_back({{"id", b.id},
                           {"shape", shape_name(b.params.shape)},
                           {"mass", b.params.mass},
                           {"restitution", b.params.restitution},
                           {"radius", b.params.radius},
                           {"attributes", attrs},
                           {"state",
                            {{"pos", vec_to_json(b.state.pos)},
                             {"vel", vec_to_json(b.state.vel)},
                             {"angle", b.state.angle},
                             {"omega", b.state.omega}}}});
  }
  return j;
}

SceneConfig scene_from_json(const json& j) {
  if (!j.is_object()) throw DataError("scene: expected an object");
  if (j.value("v", 0) != kSceneSchemaVersion) {
    throw DataError("scene: unsupported schema version");
  }
  SceneConfig scene;
  const json& p = j.at("physics");
  scene.physics.g = p.value("g", 9.81);
  scene.physics.dt = p.at("dt").get<double>();
  scene.physics.substeps_per_frame = p.at("substeps_per_frame").get<int>();
  scene.physics.lambda1 = p.at("lambda1").get<double>();
  scene.physics.lambda2 = p.at("lambda2").get<double>();
  scene.physics.lambda3 = p.at("lambda3").get<double>();
  scene.physics.lambda_omega = p.at("lambda_omega").get<double>();
  scene.visibility.min = vec_from_json(j.at("visibility").at("min"));
  scene.visibility.max = vec_from_json(j.at("visibility").at("max"));
  for (const auto& w : j.value("walls", json::array())) {
    scene.walls.push_back({vec_from_json(w.at("a")), vec_from_json(w.at("b")),
                           w.at("restitution").get<double>()});
  }
  for (const auto& b : j.at("bodies")) {
    SceneBody body;
    body.id = b.at("id").get<int>();
    const auto shape = shape_from_name(b.at("shape").get<std::string>());
    if (!shape) throw DataError("scene: unknown shape " + b.at("shape").get<std::string>());
    body.params.shape = *shape;
    body.params.mass = b.at("mass").get<double>();
    body.params.restitution = b.at("restitution").get<double>();
    body.params.radius = b.at("radius").get<double>();
    const json attrs = b.value("attributes", json::object());
    for (const auto& [k, v] : attrs.items()) {
      body.params.attributes[k] = v.get<std::string>();
    }
    const json& s = b.at("state");
    body.state.pos = vec_from_json(s.at("pos"));
    body.state.vel = vec_from_json(s.at("vel"));
    body.state.angle = s.at("angle").get<double>();
    body.state.omega = s.at("omega").get<double>();
    scene.bodies.push_back(std::move(body));
  }
  return scene;
}

json trajectory_to_json(const Trajectory& traj) {
  json j = json::array();
  for (const auto& f : traj.frames) {
    json bodies = json::array();
    for (const auto& b : f.bodies) {
      bodies.push_back({{"id", b.id},
                        {"x", b.x},
                        {"y", b.y},
                        {"alpha", b.alpha},
                        {"present", b.present}});
    }
    j.push_back({{"frame", f.frame}, {"bodies", bodies}});
  }
  return j;
}

Trajectory trajectory_from_json(const json& j) {
  if (!j.is_array()) throw DataError("trajectory: expected an array of frames");
  Trajectory traj;
  for (const auto& f : j) {
    FrameSample frame;
    frame.frame = f.at("frame").get<int>();
    for (const auto& b : f.at("bodies")) {
      BodySample s;
      s.id = b.at("id").get<int>();
      s.x = b.at("x").get<double>();
      s.y = b.at("y").get<double>();
      s.alpha = b.value("alpha", 0.0);
      s.present = b.value("present", true);
      frame.bodies.push_back(s);
    }
    traj.frames.push_back(std::move(frame));
  }
  return traj;
}

json events_to_json(const EventLog& events) {
  json j = json::array();
  for (const auto& e : events) {
    j.push_back({{"kind", event_kind_name(e.kind)},
                 {"frame", e.frame},
                 {"participants", e.participants},
                 {"source", event_source_name(e.source)}});
  }
  return j;
}

EventLog events_from_json(const json& j) {
  if (!j.is_array()) throw DataError("events: expected an array");
  EventLog log;
  for (const auto& e : j) {
    Event ev;
    const auto kind = event_kind_from_name(e.at("kind").get<std::string>());
    const auto source = event_source_from_name(e.value("source", "observed"));
    if (!kind || !source) throw DataError("events: unknown kind or source");
    ev.kind = *kind;
    ev.source = *source;
    ev.frame = e.at("frame").get<int>();
    ev.participants = e.at("participants").get<std::vector<int>>();
    log.push_back(std::move(ev));
  }
  return log;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace bevsim
