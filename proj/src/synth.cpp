#include "bevsim/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "bevsim/errors.hpp"

namespace bevsim {

namespace {

const char* kColors[] = {"gray", "red", "blue", "green", "brown", "cyan", "purple", "yellow"};
const char* kMaterials[] = {"metal", "rubber"};

/// First frame at which each body takes part in a body-body collision,
/// according to the generator's own contact records.
std::vector<int> first_collision_frames(const GeneratedScene& g) {
  std::vector<int> first(g.scene.bodies.size(), -1);
  for (const auto& e : g.events) {
    if (e.kind != EventKind::Collision) continue;
    for (int id : e.participants) {
      const int index = g.scene.body_index(id);
      if (index >= 0 && (first[index] < 0 || e.frame < first[index])) first[index] = e.frame;
    }
  }
  return first;
}

bool placement_overlaps(const SceneConfig& scene, const Vec2d& pos, double radius) {
  for (const auto& b : scene.bodies) {
    const double reach = radius + b.params.radius + 0.05;
    const Vec2d d = pos - b.state.pos;
    if (norm_squared(d) < reach * reach) return true;
  }
  return false;
}

bool meets_requirements(const GeneratedScene& g, const GeneratorSpec& spec) {
  const auto first = first_collision_frames(g);
  const bool any_collision =
      std::any_of(first.begin(), first.end(), [](int f) { return f >= 0; });
  if (spec.require_collision && g.scene.bodies.size() >= 2 && !any_collision) return false;
  if (spec.require_collision_per_body &&
      std::any_of(first.begin(), first.end(), [](int f) { return f < 0; })) {
    return false;
  }
  for (int f : first) {
    if (f >= 0 && f < spec.min_precollision_frames) return false;
    if (f >= 0 && f >= spec.frames - 4) return false;  // collision must be observable
  }
  // Grazing first contacts make restitution fitting ill-conditioned.
  std::set<std::pair<int, int>> seen;
  for (const auto& c : g.contacts) {
    if (c.j < 0 || !c.impulse_applied) continue;
    if (!seen.insert({c.i, c.j}).second) continue;
    if (c.approach_speed < spec.min_approach_speed) return false;
  }
  return true;
}

}  // namespace

GeneratedScene generate_scene(const GeneratorSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> body_count(spec.min_bodies, spec.max_bodies);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double margin = 0.8;
  const Vec2d lo{spec.visibility.min.x + margin, spec.visibility.min.y + margin};
  const Vec2d hi{spec.visibility.max.x - margin, spec.visibility.max.y - margin};

  for (int attempt = 0; attempt < 1000; ++attempt) {
    SceneConfig scene;
    scene.physics = spec.physics;
    scene.visibility = spec.visibility;
    const int n = body_count(rng);

    std::vector<int> color_order(std::size(kColors));
    for (std::size_t k = 0; k < color_order.size(); ++k) color_order[k] = static_cast<int>(k);
    std::shuffle(color_order.begin(), color_order.end(), rng);

    bool placement_ok = true;
    for (int b = 0; b < n; ++b) {
      SceneBody body;
      body.id = b;
      body.params.shape = spec.shape_mix[rng() % spec.shape_mix.size()];
      body.params.radius = spec.radius.at(body.params.shape);
      body.params.mass = spec.mass_min + (spec.mass_max - spec.mass_min) * unit(rng);
      body.params.restitution =
          spec.restitution_min + (spec.restitution_max - spec.restitution_min) * unit(rng);
      body.params.attributes["color"] = kColors[color_order[b % color_order.size()]];
      body.params.attributes["material"] = kMaterials[rng() % 2];
      body.params.attributes["shape"] = shape_name(body.params.shape);

      const bool outside = spec.allow_late_entry && b == n - 1;
      Vec2d pos;
      bool placed = false;
      for (int tries = 0; tries < 64 && !placed; ++tries) {
        if (outside) {
          // Just beyond the right edge, gliding in.
          pos = {spec.visibility.max.x + 1.0 + unit(rng),
                 lo.y + (hi.y - lo.y) * unit(rng)};
        } else {
          pos = {lo.x + (hi.x - lo.x) * unit(rng), lo.y + (hi.y - lo.y) * unit(rng)};
        }
        placed = !placement_overlaps(scene, pos, body.params.radius);
      }
      if (!placed) {
        placement_ok = false;
        break;
      }
      body.state.pos = pos;
      body.state.vel = {spec.v0_min + (spec.v0_max - spec.v0_min) * unit(rng),
                        spec.v0_min + (spec.v0_max - spec.v0_min) * unit(rng)};
      if (outside) {
        body.state.vel = {-std::abs(body.state.vel.x) - 1.0, body.state.vel.y * 0.2};
      }
      if (body.params.shape == ShapeKind::Cube) {
        body.state.angle = 2.0 * M_PI * unit(rng);
        body.state.omega = 2.0 * (unit(rng) - 0.5);
      }
      scene.bodies.push_back(std::move(body));
    }
    if (!placement_ok) continue;

    // Aim the first body at the second so the collision requirement is
    // usually met on the first try.
    if (n >= 2 && spec.require_collision) {
      const Vec2d target = scene.bodies[1].state.pos - scene.bodies[0].state.pos;
      const double dist = value_of(norm(target));
      if (dist > 1e-9) {
        const double speed = 1.5 + 2.0 * unit(rng);
        scene.bodies[0].state.vel = target * (speed / dist);
      }
    }

    if (!validate_scene(scene).empty()) continue;

    GeneratedScene out;
    out.scene = scene;
    out.observed_frames = spec.frames;
    SimulationResult sim = simulate(scene, spec.frames + spec.future_frames);
    out.trajectory = std::move(sim.trajectory);
    out.events = std::move(sim.events);
    out.contacts = std::move(sim.contacts);
    if (!meets_requirements(out, spec)) continue;
    return out;
  }
  throw GenerationExhausted();
}

Trajectory observe(const GeneratedScene& truth, const GeneratorSpec& spec) {
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> noise(0.0, 1.0);
  Trajectory obs;
  const int frames = std::min(truth.observed_frames, truth.trajectory.frame_count());
  obs.frames.reserve(frames);
  for (int f = 0; f < frames; ++f) {
    FrameSample frame = truth.trajectory.frames[f];
    for (auto& b : frame.bodies) {
      if (spec.noise_sigma > 0.0) {
        b.x += spec.noise_sigma * noise(rng);
        b.y += spec.noise_sigma * noise(rng);
      }
      b.present = truth.scene.visibility.contains({b.x, b.y});
    }
    obs.frames.push_back(std::move(frame));
  }
  return obs;
}

SceneConfig make_billiards(std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x2545F4914F6CDD1DULL + 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SceneConfig scene;
  scene.physics = GlobalPhysics{9.81, 0.004, 10, 0.0, 0.012, 0.002, 0.05};
  const double width = 2.0, height = 1.0, radius = 0.06;
  scene.visibility = Region{{0.0, 0.0}, {width, height}};
  const double cushion = 0.9;
  scene.walls = {{{0.0, 0.0}, {width, 0.0}, cushion},
                 {{width, 0.0}, {width, height}, cushion},
                 {{width, height}, {0.0, height}, cushion},
                 {{0.0, height}, {0.0, 0.0}, cushion}};

  const char* names[] = {"white", "yellow", "red"};
  for (int b = 0; b < 3; ++b) {
    SceneBody body;
    body.id = b;
    body.params.shape = ShapeKind::Sphere;
    body.params.radius = radius;
    body.params.mass = 1.0;
    body.params.restitution = 0.85 + 0.1 * unit(rng);
    body.params.attributes["color"] = names[b];
    body.params.attributes["material"] = "resin";
    body.params.attributes["shape"] = "sphere";
    Vec2d pos;
    bool placed = false;
    while (!placed) {
      pos = {radius * 2 + (width - radius * 4) * unit(rng),
             radius * 2 + (height - radius * 4) * unit(rng)};
      placed = true;
      for (const auto& other : scene.bodies) {
        if (value_of(norm(pos - other.state.pos)) < 4.5 * radius) placed = false;
      }
    }
    body.state.pos = pos;
    scene.bodies.push_back(std::move(body));
  }

  // Cue shot: aim the first ball at the second with a small offset so the
  // carom stays lively but not head-on.
  const Vec2d aim = scene.bodies[1].state.pos - scene.bodies[0].state.pos;
  const double dist = value_of(norm(aim));
  const double speed = 1.6 + 0.8 * unit(rng);
  const double off = 0.25 * (unit(rng) - 0.5);
  const Vec2d dir{(aim.x * std::cos(off) - aim.y * std::sin(off)) / dist,
                  (aim.x * std::sin(off) + aim.y * std::cos(off)) / dist};
  scene.bodies[0].state.vel = dir * speed;
  scene.bodies[1].state.vel = {0.3 * (unit(rng) - 0.5), 0.3 * (unit(rng) - 0.5)};
  scene.bodies[2].state.vel = {0.3 * (unit(rng) - 0.5), 0.3 * (unit(rng) - 0.5)};
  return scene;
}

}  // namespace bevsim
