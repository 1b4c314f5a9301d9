#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bevsim/vec2.hpp"

namespace bevsim {

/// Upper bound on a single body's restitution. Collision impulses use the
/// product of the two bodies' coefficients, so slightly-above-1 per-body
/// values are allowed; the energy invariant is enforced on the product.
inline constexpr double kRestitutionMax = 1.2;

enum class ShapeKind { Sphere, Cube, Cylinder };

/// Sphere and cylinder footprints are circles; cubes are oriented squares.
inline bool has_circle_footprint(ShapeKind s) { return s != ShapeKind::Cube; }

const char* shape_name(ShapeKind s);
std::optional<ShapeKind> shape_from_name(const std::string& name);

struct BodyParams {
  double mass = 1.0;
  double restitution = 0.8;
  double radius = 0.5;  // half-extent for cubes
  ShapeKind shape = ShapeKind::Sphere;
  std::map<std::string, std::string> attributes;  // color / material / shape
};

struct BodyState {
  Vec2d pos{};
  Vec2d vel{};
  double angle = 0.0;
  double omega = 0.0;
};

struct GlobalPhysics {
  double g = 9.81;
  double dt = 0.004;
  int substeps_per_frame = 10;
  double lambda1 = 0.1;      // sliding friction (non-sphere)
  double lambda2 = 0.1;      // rolling resistance (sphere)
  double lambda3 = 0.1;      // air resistance, quadratic in speed
  double lambda_omega = 0.1; // angular drag decay rate [1/s]

  double frame_dt() const { return dt * substeps_per_frame; }
};

/// Static wall segment; only circle-footprint bodies collide with walls.
struct Wall {
  Vec2d a{};
  Vec2d b{};
  double restitution = 1.0;
};

/// Axis-aligned region that defines enter/exit semantics and presence flags.
struct Region {
  Vec2d min{-4.0, -4.0};
  Vec2d max{4.0, 4.0};

  bool contains(const Vec2d& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }
};

struct SceneBody {
  int id = 0;
  BodyParams params;
  BodyState state;
};

struct SceneConfig {
  std::vector<SceneBody> bodies;
  GlobalPhysics physics;
  std::vector<Wall> walls;
  Region visibility;

  const SceneBody* find_body(int id) const;
  int body_index(int id) const;  // -1 if absent
};

/// One body's sample at a frame boundary. `present` mirrors visibility for
/// simulated data and detection for observed data.
struct BodySample {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double alpha = 0.0;
  bool present = true;

  Vec2d pos() const { return {x, y}; }
};

struct FrameSample {
  int frame = 0;
  std::vector<BodySample> bodies;
};

/// Per-frame time series of body positions. Used both for exact simulated
/// trajectories and for (possibly noisy, gappy) observations.
struct Trajectory {
  std::vector<FrameSample> frames;

  int frame_count() const { return static_cast<int>(frames.size()); }
  int body_count() const { return frames.empty() ? 0 : static_cast<int>(frames[0].bodies.size()); }
  const BodySample& at(int frame, int body_index) const { return frames[frame].bodies[body_index]; }
};

/// Returns all invariant violations; empty means the scene is valid.
std::vector<std::string> validate_scene(const SceneConfig& scene);

}  // namespace bevsim
