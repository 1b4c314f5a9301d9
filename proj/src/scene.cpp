#include "bevsim/scene.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "bevsim/collision.hpp"

namespace bevsim {

const char* shape_name(ShapeKind s) {
  switch (s) {
    case ShapeKind::Sphere: return "sphere";
    case ShapeKind::Cube: return "cube";
    case ShapeKind::Cylinder: return "cylinder";
  }
  return "sphere";
}

std::optional<ShapeKind> shape_from_name(const std::string& name) {
  if (name == "sphere") return ShapeKind::Sphere;
  if (name == "cube") return ShapeKind::Cube;
  if (name == "cylinder") return ShapeKind::Cylinder;
  return std::nullopt;
}

const SceneBody* SceneConfig::find_body(int id) const {
  for (const auto& b : bodies) {
    if (b.id == id) return &b;
  }
  return nullptr;
}

int SceneConfig::body_index(int id) const {
  for (std::size_t k = 0; k < bodies.size(); ++k) {
    if (bodies[k].id == id) return static_cast<int>(k);
  }
  return -1;
}

namespace {

bool bodies_overlap(const SceneBody& a, const SceneBody& b) {
  const bool circ_a = has_circle_footprint(a.params.shape);
  const bool circ_b = has_circle_footprint(b.params.shape);
  try {
    if (circ_a && circ_b) {
      return detect_circle_circle(a.state.pos, a.params.radius, b.state.pos,
                                  b.params.radius)
          .has_value();
    }
    if (circ_a) {
      return detect_circle_rect(a.state.pos, a.params.radius, b.state.pos,
                                b.params.radius, b.state.angle)
          .has_value();
    }
    if (circ_b) {
      return detect_circle_rect(b.state.pos, b.params.radius, a.state.pos,
                                a.params.radius, a.state.angle)
          .has_value();
    }
    return detect_rect_rect(a.state.pos, a.params.radius, a.state.angle,
                            b.state.pos, b.params.radius, b.state.angle)
        .has_value();
  } catch (const DegenerateCenters&) {
    return true;
  }
}

bool state_finite(const BodyState& s) {
  return std::isfinite(s.pos.x) && std::isfinite(s.pos.y) && std::isfinite(s.vel.x) &&
         std::isfinite(s.vel.y) && std::isfinite(s.angle) && std::isfinite(s.omega);
}

}  // namespace

std::vector<std::string> validate_scene(const SceneConfig& scene) {
  std::vector<std::string> errors;
  auto fail = [&](const std::string& msg) { errors.push_back(msg); };

  const auto& p = scene.physics;
  if (!(p.dt > 0.0)) fail("non-positive time step");
  if (p.substeps_per_frame < 1) fail("substeps_per_frame must be >= 1");
  if (p.lambda1 < 0.0 || p.lambda2 < 0.0 || p.lambda3 < 0.0 || p.lambda_omega < 0.0) {
    fail("negative resistance coefficient");
  }
  if (!(scene.visibility.min.x < scene.visibility.max.x) ||
      !(scene.visibility.min.y < scene.visibility.max.y)) {
    fail("empty visibility region");
  }

  std::set<int> seen_ids;
  for (const auto& b : scene.bodies) {
    std::ostringstream tag;
    tag << "body " << b.id << ": ";
    if (!seen_ids.insert(b.id).second) fail(tag.str() + "duplicate id");
    if (!(b.params.mass > 0.0)) fail(tag.str() + "non-positive mass");
    if (!(b.params.radius > 0.0)) fail(tag.str() + "non-positive radius");
    if (!(b.params.restitution > 0.0) || b.params.restitution > kRestitutionMax) {
      fail(tag.str() + "restitution outside (0, " + std::to_string(kRestitutionMax) + "]");
    }
    if (!state_finite(b.state)) fail(tag.str() + "non-finite initial state");
  }

  for (std::size_t i = 0; i < scene.bodies.size(); ++i) {
    for (std::size_t j = i + 1; j < scene.bodies.size(); ++j) {
      if (!(scene.bodies[i].params.mass > 0.0) || !(scene.bodies[j].params.mass > 0.0) ||
          !(scene.bodies[i].params.radius > 0.0) || !(scene.bodies[j].params.radius > 0.0)) {
        continue;  // overlap test meaningless for already-invalid bodies
      }
      if (bodies_overlap(scene.bodies[i], scene.bodies[j])) {
        std::ostringstream msg;
        msg << "initial overlap between bodies " << scene.bodies[i].id << " and "
            << scene.bodies[j].id;
        fail(msg.str());
      }
    }
  }
  return errors;
}

}  // namespace bevsim
