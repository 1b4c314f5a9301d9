#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "bevsim/dynamics.hpp"
#include "bevsim/scene.hpp"

namespace bevsim {

/// Seeded recipe for ground-truth scenes. Radii and resistance
/// coefficients are sample-independent: every scene drawn from the same
/// spec shares them, mirroring how they are fitted.
struct GeneratorSpec {
  std::uint64_t seed = 0;
  int min_bodies = 2;
  int max_bodies = 3;
  std::vector<ShapeKind> shape_mix{ShapeKind::Sphere, ShapeKind::Cylinder};
  double mass_min = 0.5, mass_max = 5.0;
  double restitution_min = 0.5, restitution_max = 1.0;
  double v0_min = -4.0, v0_max = 4.0;
  double noise_sigma = 0.0;
  int frames = 128;         // observed frames
  int future_frames = 128;  // extra ground-truth frames beyond the clip
  Region visibility{{-4.0, -4.0}, {4.0, 4.0}};
  GlobalPhysics physics{9.81, 0.004, 10, 0.12, 0.02, 0.01, 0.1};
  std::map<ShapeKind, double> radius{{ShapeKind::Sphere, 0.35},
                                     {ShapeKind::Cube, 0.30},
                                     {ShapeKind::Cylinder, 0.32}};
  bool require_collision = true;
  bool require_collision_per_body = false;
  int min_precollision_frames = 10;
  double min_approach_speed = 0.5;  // reject grazing first contacts
  bool allow_late_entry = false;    // spawn one body outside visibility
};

/// A generated scene together with the exact rollout the generator itself
/// produced; the stored trajectory and events are oracle truth.
struct GeneratedScene {
  SceneConfig scene;
  Trajectory trajectory;  // frames 0 .. frames + future_frames
  EventLog events;
  std::vector<ContactRecord> contacts;
  int observed_frames = 0;
};

/// Rejection-samples non-overlapping placements until the simulated rollout
/// satisfies the spec's collision requirements. Deterministic per seed.
/// Throws GenerationExhausted after 1000 attempts.
GeneratedScene generate_scene(const GeneratorSpec& spec);

/// Frame-rate observation of the ground truth: per-coordinate Gaussian
/// noise (seeded from spec.seed), presence flags from the visibility
/// region. Sigma zero returns the exact trajectory samples.
Trajectory observe(const GeneratedScene& truth, const GeneratorSpec& spec);

/// Three billiard balls on a 2:1 table with four cushion walls
/// (restitution 0.9) and rolling resistance.
SceneConfig make_billiards(std::uint64_t seed);

}  // namespace bevsim
