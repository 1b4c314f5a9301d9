#include "bevsim/gradients.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bevsim/errors.hpp"

namespace bevsim {

double reparam_decode(double u, Reparam r) {
  switch (r) {
    case Reparam::Identity: return u;
    case Reparam::ExpPositive: return std::exp(u);
    case Reparam::BoundedSigmoid: return kRestitutionMax / (1.0 + std::exp(-u));
  }
  return u;
}

double reparam_encode(double x, Reparam r) {
  switch (r) {
    case Reparam::Identity: return x;
    case Reparam::ExpPositive: return std::log(x);
    case Reparam::BoundedSigmoid: {
      const double clipped = std::min(x, kRestitutionMax * (1.0 - 1e-12));
      return std::log(clipped / (kRestitutionMax - clipped));
    }
  }
  return x;
}

namespace {

template <typename T>
T seeded(double value);
template <>
double seeded<double>(double value) { return value; }
template <>
Dual seeded<Dual>(double value) { return {value, 1.0}; }

template <typename T>
T decode_t(const T& u, Reparam r) {
  using std::exp;
  switch (r) {
    case Reparam::Identity: return u;
    case Reparam::ExpPositive: return exp(u);
    case Reparam::BoundedSigmoid: return T(kRestitutionMax) / (T(1) + exp(-u));
  }
  return u;
}

}  // namespace

bool ParamId::is_global() const {
  return field == ParamField::RadiusClass || field == ParamField::Lambda1 ||
         field == ParamField::Lambda2 || field == ParamField::Lambda3 ||
         field == ParamField::LambdaOmega;
}

std::string ParamId::label() const {
  std::ostringstream out;
  switch (field) {
    case ParamField::PosX: out << "l0x"; break;
    case ParamField::PosY: out << "l0y"; break;
    case ParamField::VelX: out << "v0x"; break;
    case ParamField::VelY: out << "v0y"; break;
    case ParamField::Angle: out << "alpha0"; break;
    case ParamField::Omega: out << "omega0"; break;
    case ParamField::Mass: out << "mass"; break;
    case ParamField::Restitution: out << "restitution"; break;
    case ParamField::RadiusClass: out << "radius." << shape_name(shape_class); break;
    case ParamField::Lambda1: out << "lambda1"; break;
    case ParamField::Lambda2: out << "lambda2"; break;
    case ParamField::Lambda3: out << "lambda3"; break;
    case ParamField::LambdaOmega: out << "lambda_omega"; break;
  }
  if (!is_global()) out << "[s" << scene << ".b" << body << "]";
  return out.str();
}

Reparam default_reparam(ParamField field) {
  switch (field) {
    case ParamField::Mass:
    case ParamField::RadiusClass:
    case ParamField::Lambda1:
    case ParamField::Lambda2:
    case ParamField::Lambda3:
    case ParamField::LambdaOmega:
      return Reparam::ExpPositive;
    case ParamField::Restitution:
      return Reparam::BoundedSigmoid;
    default:
      return Reparam::Identity;
  }
}

std::vector<double> ParamVector::unconstrained() const {
  std::vector<double> u(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) u[k] = params[k].u;
  return u;
}

void ParamVector::set_unconstrained(const std::vector<double>& u) {
  for (std::size_t k = 0; k < params.size(); ++k) params[k].u = u[k];
}

double ParamVector::physical(std::size_t k) const {
  return reparam_decode(params[k].u, params[k].reparam);
}

void ParamVector::push(ParamId id, double physical_value, Reparam reparam) {
  params.push_back({id, reparam_encode(physical_value, reparam), reparam});
}

bool SampleMask::includes(int body_id, int frame) const {
  if (!bodies.empty() &&
      std::find(bodies.begin(), bodies.end(), body_id) == bodies.end()) {
    return false;
  }
  auto it = body_end_frame.find(body_id);
  if (it != body_end_frame.end() && frame >= it->second) return false;
  return true;
}

double trajectory_loss(const Trajectory& simulated, const Trajectory& observed,
                       FrameRange range, const SampleMask& mask) {
  double loss = 0.0;
  std::size_t included = 0;
  for (const auto& obs_frame : observed.frames) {
    const int f = obs_frame.frame;
    if (f < range.begin || f >= range.end) continue;
    if (f >= simulated.frame_count()) continue;
    const FrameSample& sim_frame = simulated.frames[f];
    for (const auto& obs_body : obs_frame.bodies) {
      if (!obs_body.present) continue;
      if (!mask.includes(obs_body.id, f)) continue;
      for (const auto& sim_body : sim_frame.bodies) {
        if (sim_body.id != obs_body.id) continue;
        const double dx = sim_body.x - obs_body.x;
        const double dy = sim_body.y - obs_body.y;
        loss += dx * dx + dy * dy;
        ++included;
        break;
      }
    }
  }
  if (included == 0) throw EmptyMask();
  return loss;
}

namespace {

/// Applies decoded parameter values into a simulation world. Exactly one
/// parameter (seed_param >= 0) carries a unit derivative seed.
template <typename T>
SimWorld<T> build_world(const SceneConfig& scene, const ParamVector& theta,
                        int scene_index, int seed_param) {
  SimWorld<T> world = make_sim_world<T>(scene);
  for (std::size_t k = 0; k < theta.params.size(); ++k) {
    const Param& p = theta.params[k];
    if (!p.id.is_global() && p.id.scene != scene_index) continue;
    T u(p.u);
    if (static_cast<int>(k) == seed_param) u = seeded<T>(p.u);
    const T x = decode_t(u, p.reparam);
    switch (p.id.field) {
      case ParamField::Lambda1: world.physics.lambda1 = x; break;
      case ParamField::Lambda2: world.physics.lambda2 = x; break;
      case ParamField::Lambda3: world.physics.lambda3 = x; break;
      case ParamField::LambdaOmega: world.physics.lambda_omega = x; break;
      case ParamField::RadiusClass:
        for (std::size_t b = 0; b < world.bodies.size(); ++b) {
          if (scene.bodies[b].params.shape == p.id.shape_class) {
            world.bodies[b].radius = x;
          }
        }
        break;
      default: {
        const int index = scene.body_index(p.id.body);
        if (index < 0) throw UnknownBody(p.id.body);
        SimBody<T>& body = world.bodies[index];
        switch (p.id.field) {
          case ParamField::PosX: body.pos.x = x; break;
          case ParamField::PosY: body.pos.y = x; break;
          case ParamField::VelX: body.vel.x = x; break;
          case ParamField::VelY: body.vel.y = x; break;
          case ParamField::Angle: body.angle = x; break;
          case ParamField::Omega: body.omega = x; break;
          case ParamField::Mass: body.mass = x; break;
          case ParamField::Restitution: body.restitution = x; break;
          default: break;
        }
        break;
      }
    }
  }
  return world;
}

/// Masked squared-distance loss over a rollout grid, generic in the scalar.
template <typename T>
T grid_loss(const RolloutGrid<T>& grid, const SceneConfig& scene,
            const Trajectory& observed, FrameRange range, const SampleMask& mask,
            std::size_t* included) {
  T loss{};
  for (const auto& obs_frame : observed.frames) {
    const int f = obs_frame.frame;
    if (f < range.begin || f >= range.end) continue;
    if (f >= static_cast<int>(grid.positions.size())) continue;
    for (const auto& obs_body : obs_frame.bodies) {
      if (!obs_body.present) continue;
      if (!mask.includes(obs_body.id, f)) continue;
      const int index = scene.body_index(obs_body.id);
      if (index < 0) continue;
      const Vec2<T>& sim = grid.positions[f][index];
      const T dx = sim.x - T(obs_body.x);
      const T dy = sim.y - T(obs_body.y);
      loss += dx * dx + dy * dy;
      ++*included;
    }
  }
  return loss;
}

template <typename T>
T scene_loss(const FitScene& fs, const ParamVector& theta, int scene_index,
             int seed_param, std::size_t* included) {
  SimWorld<T> world = build_world<T>(fs.scene, theta, scene_index, seed_param);
  world.contacts_enabled = fs.contacts;
  const int frames_needed = fs.range.end - 1;
  const RolloutGrid<T> grid = simulate_world(std::move(world), std::max(frames_needed, 1));
  return grid_loss(grid, fs.scene, fs.observed, fs.range, fs.mask, included);
}

}  // namespace

SimWorld<Dual> apply_params_dual(const SceneConfig& scene, const ParamVector& theta,
                                 int scene_index, int seed_param) {
  return build_world<Dual>(scene, theta, scene_index, seed_param);
}

SimWorld<double> apply_params(const SceneConfig& scene, const ParamVector& theta,
                              int scene_index) {
  return build_world<double>(scene, theta, scene_index, -1);
}

SceneConfig scene_with_params(const SceneConfig& scene, const ParamVector& theta,
                              int scene_index) {
  SceneConfig out = scene;
  const SimWorld<double> world = apply_params(scene, theta, scene_index);
  for (std::size_t b = 0; b < out.bodies.size(); ++b) {
    out.bodies[b].params.mass = world.bodies[b].mass;
    out.bodies[b].params.restitution = world.bodies[b].restitution;
    out.bodies[b].params.radius = world.bodies[b].radius;
    out.bodies[b].state.pos = world.bodies[b].pos;
    out.bodies[b].state.vel = world.bodies[b].vel;
    out.bodies[b].state.angle = world.bodies[b].angle;
    out.bodies[b].state.omega = world.bodies[b].omega;
  }
  out.physics.lambda1 = world.physics.lambda1;
  out.physics.lambda2 = world.physics.lambda2;
  out.physics.lambda3 = world.physics.lambda3;
  out.physics.lambda_omega = world.physics.lambda_omega;
  return out;
}

double loss_value(const std::vector<FitScene>& scenes, const ParamVector& theta) {
  double total = 0.0;
  std::size_t included = 0;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    total += scene_loss<double>(scenes[s], theta, static_cast<int>(s), -1, &included);
  }
  if (included == 0) throw EmptyMask();
  return total;
}

GradResult grad_loss(const std::vector<FitScene>& scenes, const ParamVector& theta) {
  GradResult out;
  out.grad.assign(theta.size(), 0.0);
  std::size_t included = 0;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    out.loss += scene_loss<double>(scenes[s], theta, static_cast<int>(s), -1, &included);
  }
  if (included == 0) throw EmptyMask();

  for (std::size_t k = 0; k < theta.size(); ++k) {
    const Param& p = theta.params[k];
    double deriv = 0.0;
    std::size_t dummy = 0;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
      if (!p.id.is_global() && p.id.scene != static_cast<int>(s)) continue;
      const Dual l = scene_loss<Dual>(scenes[s], theta, static_cast<int>(s),
                                      static_cast<int>(k), &dummy);
      deriv += l.d;
    }
    out.grad[k] = deriv;
  }
  return out;
}

std::vector<double> finite_diff_grad(const std::vector<FitScene>& scenes,
                                     const ParamVector& theta, double h) {
  std::vector<double> grad(theta.size(), 0.0);
  ParamVector shifted = theta;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double u0 = theta.params[k].u;
    shifted.params[k].u = u0 + h;
    const double plus = loss_value(scenes, shifted);
    shifted.params[k].u = u0 - h;
    const double minus = loss_value(scenes, shifted);
    shifted.params[k].u = u0;
    grad[k] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

}  // namespace bevsim
