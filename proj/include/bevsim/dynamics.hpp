#pragma once

#include <vector>

#include "bevsim/collision.hpp"
#include "bevsim/dual.hpp"
#include "bevsim/events.hpp"
#include "bevsim/scene.hpp"
#include "bevsim/vec2.hpp"

namespace bevsim {

/// Speeds below this are treated as rest: the resistance law divides by |v|
/// and its zero-velocity limit is taken to be zero acceleration.
inline constexpr double kVelocityEpsilon = 1e-6;

/// Simulation-side body and physics mirrors, templated so that the same
/// stepping code produces plain rollouts (T = double) and directional
/// derivatives (T = Dual). Only quantities that can be fitted are templated.
template <typename T>
struct SimBody {
  ShapeKind shape = ShapeKind::Sphere;
  T mass{};
  T restitution{};
  T radius{};
  Vec2<T> pos{};
  Vec2<T> vel{};
  T angle{};
  T omega{};
};

template <typename T>
struct SimPhysics {
  double g = 9.81;
  double dt = 0.004;
  int substeps_per_frame = 10;
  T lambda1{};
  T lambda2{};
  T lambda3{};
  T lambda_omega{};
};

template <typename T>
struct SimWorld {
  std::vector<SimBody<T>> bodies;
  SimPhysics<T> physics;
  std::vector<Wall> walls;  // fixed geometry, never fitted
  // Identification stages that fit collision-independent parameters roll
  // out pure drag motion; contact handling is switched off for them.
  bool contacts_enabled = true;
};

template <typename T>
SimWorld<T> make_sim_world(const SceneConfig& scene) {
  SimWorld<T> w;
  w.physics.g = scene.physics.g;
  w.physics.dt = scene.physics.dt;
  w.physics.substeps_per_frame = scene.physics.substeps_per_frame;
  w.physics.lambda1 = T(scene.physics.lambda1);
  w.physics.lambda2 = T(scene.physics.lambda2);
  w.physics.lambda3 = T(scene.physics.lambda3);
  w.physics.lambda_omega = T(scene.physics.lambda_omega);
  w.walls = scene.walls;
  w.bodies.reserve(scene.bodies.size());
  for (const auto& b : scene.bodies) {
    SimBody<T> sb;
    sb.shape = b.params.shape;
    sb.mass = T(b.params.mass);
    sb.restitution = T(b.params.restitution);
    sb.radius = T(b.params.radius);
    sb.pos = {T(b.state.pos.x), T(b.state.pos.y)};
    sb.vel = {T(b.state.vel.x), T(b.state.vel.y)};
    sb.angle = T(b.state.angle);
    sb.omega = T(b.state.omega);
    w.bodies.push_back(sb);
  }
  return w;
}

/// Ground resistance acceleration: -(v/|v|)(λ·g + λ3·|v|²) with λ = λ1 for
/// non-spheres (sliding friction) and λ = λ2 for spheres (rolling
/// resistance). Zero below the rest threshold.
template <typename T>
Vec2<T> resistance_acceleration(const Vec2<T>& vel, ShapeKind shape,
                                const SimPhysics<T>& phys) {
  using std::sqrt;
  const T speed2 = norm_squared(vel);
  if (value_of(speed2) < kVelocityEpsilon * kVelocityEpsilon) return {};
  const T speed = sqrt(speed2);
  const T& lambda = (shape == ShapeKind::Sphere) ? phys.lambda2 : phys.lambda1;
  const T magnitude = lambda * T(phys.g) + phys.lambda3 * speed2;
  return vel * (-magnitude / speed);
}

/// One-step exponential angular drag: ω·exp(-λ_ω·Δt).
template <typename T>
T angular_drag(const T& omega, const SimPhysics<T>& phys) {
  using std::exp;
  return omega * exp(-phys.lambda_omega * T(phys.dt));
}

/// Midpoint RK2 advance of (position, velocity) under an arbitrary
/// velocity-dependent acceleration. Exposed separately so tests can stub
/// the acceleration.
template <typename T, typename AccelFn>
void rk2_advance(Vec2<T>& pos, Vec2<T>& vel, double dt, AccelFn&& accel) {
  const Vec2<T> a1 = accel(vel);
  const Vec2<T> v_mid = vel + a1 * T(dt * 0.5);
  const Vec2<T> a2 = accel(v_mid);
  pos += v_mid * T(dt);
  vel += a2 * T(dt);
}

/// Free motion for one Δt: RK2 on position/velocity under the resistance
/// law, RK2 on the angle under exponentially decaying spin. If drag would
/// reverse the velocity within the step, the body instead stops exactly
/// where the decelerated motion ends (static-stop rule).
template <typename T>
void rk2_step(SimBody<T>& body, const SimPhysics<T>& phys) {
  using std::exp;
  using std::sqrt;
  const double dt = phys.dt;

  const T speed2 = norm_squared(body.vel);
  if (value_of(speed2) >= kVelocityEpsilon * kVelocityEpsilon) {
    const Vec2<T> a1 = resistance_acceleration(body.vel, body.shape, phys);
    const T decel2 = norm_squared(a1);
    const T speed = sqrt(speed2);
    if (value_of(decel2) > 0.0 &&
        value_of(decel2) * dt * dt >= value_of(speed2)) {
      // Would reverse within the step: travel the remaining stopping
      // distance |v|^2 / (2|a|) and come to rest.
      const T decel = sqrt(decel2);
      body.pos += body.vel * (speed / (decel * T(2)));
      body.vel = {};
    } else {
      rk2_advance(body.pos, body.vel, dt, [&](const Vec2<T>& v) {
        return resistance_acceleration(v, body.shape, phys);
      });
    }
  }

  // Angle midpoint: ω(t) decays exponentially, so the midpoint spin is
  // ω·exp(-λ_ω·dt/2).
  body.angle += body.omega * exp(-phys.lambda_omega * T(0.5 * dt)) * T(dt);
  body.omega = angular_drag(body.omega, phys);
}

/// Advance the whole world by one Δt: resolve contacts from the current
/// positions (body pairs in ascending (i, j) order, then walls), then
/// integrate free motion. Appends one ContactRecord per detected overlap.
template <typename T>
void step_world(SimWorld<T>& world, int substep_index,
                std::vector<ContactRecord>* contacts_out) {
  const int n = world.contacts_enabled ? static_cast<int>(world.bodies.size()) : 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      SimBody<T>& a = world.bodies[i];
      SimBody<T>& b = world.bodies[j];
      std::optional<ContactT<T>> contact;
      const bool circ_a = has_circle_footprint(a.shape);
      const bool circ_b = has_circle_footprint(b.shape);
      if (circ_a && circ_b) {
        contact = detect_circle_circle(a.pos, a.radius, b.pos, b.radius);
      } else if (circ_a) {
        contact = detect_circle_rect(a.pos, a.radius, b.pos, b.radius, b.angle);
      } else if (circ_b) {
        auto flipped = detect_circle_rect(b.pos, b.radius, a.pos, a.radius, a.angle);
        if (flipped) {
          ContactT<T> c;
          c.normal = -flipped->normal;
          c.point = flipped->point;
          c.penetration = flipped->penetration;
          contact = c;
        }
      } else {
        contact = detect_rect_rect(a.pos, a.radius, a.angle, b.pos, b.radius, b.angle);
      }
      if (!contact) continue;
      contact->i = i;
      contact->j = j;

      auto impulse = resolve_impulse(*contact, a.mass, a.restitution, a.vel,
                                     b.mass, b.restitution, b.vel);
      if (impulse.applied) {
        a.vel += impulse.dv_i;
        b.vel += impulse.dv_j;
        a.omega += angular_impulse(a.shape, a.mass, a.radius, a.pos, contact->point,
                                   impulse.dv_i);
        b.omega += angular_impulse(b.shape, b.mass, b.radius, b.pos, contact->point,
                                   impulse.dv_j);
      }
      if (contacts_out) {
        contacts_out->push_back({substep_index, i, j, -1, impulse.applied,
                                 impulse.approach_speed});
      }
    }
  }

  const int wall_count = static_cast<int>(world.walls.size());
  for (int i = 0; i < n; ++i) {
    SimBody<T>& body = world.bodies[i];
    if (!has_circle_footprint(body.shape)) continue;
    for (int wi = 0; wi < wall_count; ++wi) {
      auto contact = detect_circle_wall(body.pos, body.radius, world.walls[wi]);
      if (!contact) continue;
      contact->i = i;
      contact->wall = wi;
      const T along = dot(contact->normal, body.vel);
      const Vec2<T> dv = resolve_wall(*contact, body.restitution,
                                      world.walls[wi].restitution, body.vel);
      const bool applied = value_of(along) < 0.0;
      body.vel += dv;
      if (contacts_out) {
        contacts_out->push_back({substep_index, i, -1, wi, applied,
                                 -value_of(along)});
      }
    }
  }

  for (auto& body : world.bodies) rk2_step(body, world.physics);
}

/// Frame-boundary positions (and angles) of a rollout, kept in the scalar
/// type so losses can carry derivatives.
template <typename T>
struct RolloutGrid {
  std::vector<std::vector<Vec2<T>>> positions;  // [frame][body]
  std::vector<std::vector<T>> angles;
};

/// Roll the world forward n_frames·substeps_per_frame steps, sampling at
/// frame boundaries (n_frames + 1 samples including the initial state).
template <typename T>
RolloutGrid<T> simulate_world(SimWorld<T> world, int n_frames,
                              std::vector<ContactRecord>* contacts_out = nullptr) {
  RolloutGrid<T> grid;
  const int n = static_cast<int>(world.bodies.size());
  grid.positions.reserve(n_frames + 1);
  grid.angles.reserve(n_frames + 1);
  auto sample = [&] {
    std::vector<Vec2<T>> row(n);
    std::vector<T> arow(n);
    for (int i = 0; i < n; ++i) {
      row[i] = world.bodies[i].pos;
      arow[i] = world.bodies[i].angle;
    }
    grid.positions.push_back(std::move(row));
    grid.angles.push_back(std::move(arow));
  };
  sample();
  int substep = 0;
  for (int f = 0; f < n_frames; ++f) {
    for (int s = 0; s < world.physics.substeps_per_frame; ++s) {
      step_world(world, substep++, contacts_out);
    }
    sample();
  }
  return grid;
}

struct SimulationResult {
  Trajectory trajectory;
  EventLog events;
  std::vector<ContactRecord> contacts;
};

/// Full deterministic rollout of a validated scene: positions at frame
/// boundaries plus the extracted event log. Throws InvalidScene when
/// validation fails.
SimulationResult simulate(const SceneConfig& scene, int n_frames);

/// The trajectory a rollout grid induces, with presence flags taken from
/// the scene's visibility region.
Trajectory grid_to_trajectory(const RolloutGrid<double>& grid, const SceneConfig& scene);

}  // namespace bevsim
