#include "bevsim/identify.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cstdio>
#include <cmath>
#include <set>

#include "bevsim/dynamics.hpp"
#include "bevsim/errors.hpp"

namespace bevsim {

namespace {

constexpr double kMarkMargin = 0.05;     // fraction of the combined radii
constexpr double kMovingSpeed = 0.05;    // m/s; below this a body gives no drag signal
constexpr double kDefaultMass = 1.0;
constexpr double kDefaultRestitution = 0.8;
constexpr double kDefaultRadius = 0.5;

double point_segment_distance(const Vec2d& p, const Vec2d& a, const Vec2d& b) {
  const Vec2d ab = b - a;
  const double len2 = norm_squared(ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + ab * t));
}

/// First / second present samples of a body inside a frame window.
struct PresentSamples {
  std::vector<int> frames;
  std::vector<Vec2d> positions;
  std::vector<double> alphas;
};

PresentSamples present_samples(const Trajectory& obs, int body_index, int end_frame) {
  PresentSamples out;
  for (const auto& frame : obs.frames) {
    if (frame.frame >= end_frame) break;
    const auto& s = frame.bodies[body_index];
    if (!s.present) continue;
    out.frames.push_back(frame.frame);
    out.positions.push_back(s.pos());
    out.alphas.push_back(s.alpha);
  }
  return out;
}

/// Velocity estimate at the first observed sample: the forward difference
/// carries an O(a·h/2) bias under drag, so we subtract the modeled
/// resistance at the estimated speed (two fixed-point corrections).
Vec2d estimate_v0(const PresentSamples& s, ShapeKind shape, const GlobalPhysics& phys) {
  if (s.frames.size() < 2) return {};
  const double h = phys.frame_dt() * (s.frames[1] - s.frames[0]);
  const Vec2d diff = (s.positions[1] - s.positions[0]) / h;
  SimPhysics<double> simphys{phys.g, phys.dt, phys.substeps_per_frame,
                             phys.lambda1,  phys.lambda2, phys.lambda3,
                             phys.lambda_omega};
  Vec2d v = diff;
  for (int k = 0; k < 2; ++k) {
    v = diff - resistance_acceleration(v, shape, simphys) * (0.5 * h);
  }
  return v;
}

std::string body_label(const char* what, int body_id) {
  return std::string(what) + ".b" + std::to_string(body_id);
}

/// The latest frame any mask window needs; simulating past it is wasted work.
int required_frames(const std::vector<std::optional<int>>& marks, int obs_frames) {
  int needed = 0;
  for (const auto& m : marks) needed = std::max(needed, m ? *m : obs_frames);
  return std::max(1, std::min(needed, obs_frames));
}

ParamVector state_params(const SceneConfig& tmpl, const Trajectory& obs,
                         const std::vector<std::optional<int>>& marks, int scene_index) {
  ParamVector theta;
  for (std::size_t b = 0; b < tmpl.bodies.size(); ++b) {
    const int end = marks[b] ? *marks[b] : obs.frame_count();
    const auto samples = present_samples(obs, static_cast<int>(b), end);
    if (samples.frames.size() < 3) continue;  // unconstrained; keep template state
    const int id = tmpl.bodies[b].id;
    const Vec2d l0 = samples.positions[0];
    const Vec2d v0 = estimate_v0(samples, tmpl.bodies[b].params.shape, tmpl.physics);
    theta.push({ParamField::PosX, scene_index, id}, l0.x, Reparam::Identity);
    theta.push({ParamField::PosY, scene_index, id}, l0.y, Reparam::Identity);
    theta.push({ParamField::VelX, scene_index, id}, v0.x, Reparam::Identity);
    theta.push({ParamField::VelY, scene_index, id}, v0.y, Reparam::Identity);
  }
  return theta;
}

SampleMask mask_from_marks(const SceneConfig& tmpl,
                           const std::vector<std::optional<int>>& marks) {
  SampleMask mask;
  for (std::size_t b = 0; b < tmpl.bodies.size(); ++b) {
    if (marks[b]) mask.body_end_frame[tmpl.bodies[b].id] = *marks[b];
  }
  return mask;
}

Objective make_objective(const std::vector<FitScene>& scenes, ParamVector& theta) {
  return [&scenes, &theta](const std::vector<double>& u) {
    theta.set_unconstrained(u);
    const GradResult r = grad_loss(scenes, theta);
    return std::make_pair(r.loss, r.grad);
  };
}

}  // namespace

const char* fit_flag_name(FitFlag f) {
  switch (f) {
    case FitFlag::Fitted: return "fitted";
    case FitFlag::Pinned: return "pinned";
    case FitFlag::Defaulted: return "defaulted";
    case FitFlag::FromObservation: return "from_observation";
    case FitFlag::FromTemplate: return "from_template";
    case FitFlag::Unidentifiable: return "unidentifiable";
  }
  return "fitted";
}

std::vector<std::optional<int>> mark_first_collisions(const Trajectory& observed,
                                                      const std::vector<double>& radii) {
  const int n = observed.body_count();
  std::vector<std::optional<int>> marks(n);
  for (const auto& frame : observed.frames) {
    for (int i = 0; i < n; ++i) {
      if (marks[i]) continue;
      const auto& a = frame.bodies[i];
      if (!a.present) continue;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const auto& b = frame.bodies[j];
        if (!b.present) continue;
        const double reach = (radii[i] + radii[j]) * (1.0 + kMarkMargin);
        if (norm_squared(a.pos() - b.pos()) < reach * reach) {
          marks[i] = frame.frame;
          break;
        }
      }
    }
  }
  return marks;
}

std::vector<std::optional<int>> mark_first_wall_contacts(const Trajectory& observed,
                                                         const std::vector<double>& radii,
                                                         const std::vector<Wall>& walls) {
  const int n = observed.body_count();
  std::vector<std::optional<int>> marks(n);
  if (walls.empty()) return marks;
  for (const auto& frame : observed.frames) {
    for (int i = 0; i < n; ++i) {
      if (marks[i]) continue;
      const auto& s = frame.bodies[i];
      if (!s.present) continue;
      for (const auto& w : walls) {
        if (point_segment_distance(s.pos(), w.a, w.b) < radii[i] * (1.0 + kMarkMargin)) {
          marks[i] = frame.frame;
          break;
        }
      }
    }
  }
  return marks;
}

std::vector<std::optional<int>> combine_marks(const std::vector<std::optional<int>>& a,
                                              const std::vector<std::optional<int>>& b) {
  std::vector<std::optional<int>> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] && b[k]) {
      out[k] = std::min(*a[k], *b[k]);
    } else {
      out[k] = a[k] ? a[k] : b[k];
    }
  }
  return out;
}

namespace {

struct GlobalContext {
  std::vector<SceneConfig> templates;  // with current radii / lambdas baked
  const std::vector<Trajectory>* observations = nullptr;
  std::vector<std::vector<std::optional<int>>> pair_marks;
  std::vector<std::vector<std::optional<int>>> wall_marks;
  std::vector<std::vector<std::optional<int>>> marks;  // combined
};

void bake_radii(SceneConfig& scene, const std::map<ShapeKind, double>& radii) {
  for (auto& b : scene.bodies) b.params.radius = radii.at(b.params.shape);
}

/// Rough state estimates for every body directly from the observation, so
/// contact-enabled rollouts never start from stacked template states. A
/// body that is never observed is parked far outside the arena.
void seed_states_from_observation(SceneConfig& scene, const Trajectory& obs) {
  for (std::size_t b = 0; b < scene.bodies.size(); ++b) {
    const auto samples = present_samples(obs, static_cast<int>(b), obs.frame_count());
    if (samples.frames.empty()) {
      scene.bodies[b].state.pos = {1e6 + 1e3 * static_cast<double>(b), 1e6};
      scene.bodies[b].state.vel = {};
      continue;
    }
    scene.bodies[b].state.pos = samples.positions[0];
    scene.bodies[b].state.vel =
        estimate_v0(samples, scene.bodies[b].params.shape, scene.physics);
  }
}

void recompute_marks(GlobalContext& ctx) {
  ctx.pair_marks.clear();
  ctx.wall_marks.clear();
  ctx.marks.clear();
  for (std::size_t s = 0; s < ctx.templates.size(); ++s) {
    std::vector<double> radii;
    for (const auto& b : ctx.templates[s].bodies) radii.push_back(b.params.radius);
    auto pair = mark_first_collisions((*ctx.observations)[s], radii);
    auto wall = mark_first_wall_contacts((*ctx.observations)[s], radii,
                                         ctx.templates[s].walls);
    ctx.marks.push_back(combine_marks(pair, wall));
    ctx.pair_marks.push_back(std::move(pair));
    ctx.wall_marks.push_back(std::move(wall));
  }
}

/// Joint (lambda, per-scene states) fit on pre-interaction windows via
/// variable projection: for any candidate lambdas the optimal states
/// decompose into independent single-body drag fits, so the outer
/// optimizer works on the reduced 1-3 dimensional lambda objective. At the
/// inner optimum the state gradients vanish, so the plain lambda gradient
/// with states held fixed is the exact reduced gradient. A monolithic
/// quasi-Newton pass over all ~4K+3 coupled unknowns and a plain
/// block-coordinate alternation both stall in the coupled valley; this
/// formulation does not. Results end up baked into ctx.templates.
std::vector<double> fit_lambdas_and_states(GlobalContext& ctx, const FitSchedule& schedule,
                                           bool fit_l1, bool fit_l2, bool fit_l3) {
  // Inner solver: per-body collision-independent state fits, warm-started
  // from the current template states.
  auto refit_states = [&ctx, &schedule] {
    for (std::size_t s = 0; s < ctx.templates.size(); ++s) {
      SceneConfig& tmpl = ctx.templates[s];
      const auto& obs = (*ctx.observations)[s];
      for (std::size_t b = 0; b < tmpl.bodies.size(); ++b) {
        const int end = ctx.marks[s][b] ? *ctx.marks[s][b] : obs.frame_count();
        const auto samples = present_samples(obs, static_cast<int>(b), end);
        if (samples.frames.size() < 3) continue;  // unconstrained body
        const int id = tmpl.bodies[b].id;

        ParamVector theta;
        theta.push({ParamField::PosX, 0, id}, tmpl.bodies[b].state.pos.x,
                   Reparam::Identity);
        theta.push({ParamField::PosY, 0, id}, tmpl.bodies[b].state.pos.y,
                   Reparam::Identity);
        theta.push({ParamField::VelX, 0, id}, tmpl.bodies[b].state.vel.x,
                   Reparam::Identity);
        theta.push({ParamField::VelY, 0, id}, tmpl.bodies[b].state.vel.y,
                   Reparam::Identity);

        std::vector<FitScene> scenes(1);
        scenes[0].scene = tmpl;
        scenes[0].scene.bodies.clear();
        scenes[0].scene.bodies.push_back(tmpl.bodies[b]);
        scenes[0].observed = obs;
        scenes[0].range = {0, std::max(end, 1)};
        scenes[0].mask.bodies = {id};
        scenes[0].mask.body_end_frame[id] = end;
        scenes[0].contacts = false;

        LbfgsOptions opt;
        opt.max_steps = schedule.max_steps;
        opt.threshold = 1e-18;
        const LbfgsResult res = lbfgs_minimize(make_objective(scenes, theta),
                                               theta.unconstrained(), opt);
        theta.set_unconstrained(res.best_x);
        tmpl.bodies[b].state.pos = {theta.physical(0), theta.physical(1)};
        tmpl.bodies[b].state.vel = {theta.physical(2), theta.physical(3)};
      }
    }
  };

  ParamVector lambda_theta;
  if (fit_l1) lambda_theta.push({ParamField::Lambda1}, ctx.templates[0].physics.lambda1,
                                Reparam::ExpPositive);
  if (fit_l2) lambda_theta.push({ParamField::Lambda2}, ctx.templates[0].physics.lambda2,
                                Reparam::ExpPositive);
  if (fit_l3) lambda_theta.push({ParamField::Lambda3}, ctx.templates[0].physics.lambda3,
                                Reparam::ExpPositive);
  if (lambda_theta.params.empty()) {
    refit_states();
    return {};
  }

  auto bake_lambdas = [&ctx](const ParamVector& theta) {
    for (auto& tmpl : ctx.templates) {
      const SceneConfig updated = scene_with_params(tmpl, theta, 0);
      tmpl.physics = updated.physics;
    }
  };

  const Objective reduced = [&](const std::vector<double>& u) {
    ParamVector theta = lambda_theta;
    theta.set_unconstrained(u);
    bake_lambdas(theta);
    refit_states();

    std::vector<FitScene> scenes;
    for (std::size_t s = 0; s < ctx.templates.size(); ++s) {
      FitScene fs;
      fs.scene = ctx.templates[s];
      fs.observed = (*ctx.observations)[s];
      fs.range = {0, required_frames(ctx.marks[s], fs.observed.frame_count())};
      fs.mask = mask_from_marks(ctx.templates[s], ctx.marks[s]);
      fs.contacts = false;  // windows are pre-interaction by construction
      scenes.push_back(std::move(fs));
    }
    const GradResult r = grad_loss(scenes, theta);
    return std::make_pair(r.loss, r.grad);
  };

  LbfgsOptions opt;
  opt.max_steps = schedule.global_max_steps;
  opt.threshold = schedule.global_threshold;
  const LbfgsResult res = lbfgs_minimize(reduced, lambda_theta.unconstrained(), opt);
  lambda_theta.set_unconstrained(res.best_x);
  bake_lambdas(lambda_theta);
  refit_states();
  return res.trace;
}

/// Per-scene nuisance (mass, restitution) parameters for the radius scan.
ParamVector scene_nuisance_params(const GlobalContext& ctx, std::size_t s) {
  ParamVector theta;
  const auto& tmpl = ctx.templates[s];
  int pinned = -1;
  int pinned_frame = -1;
  for (std::size_t b = 0; b < tmpl.bodies.size(); ++b) {
    if (ctx.pair_marks[s][b] && (pinned < 0 || *ctx.pair_marks[s][b] < pinned_frame)) {
      pinned = static_cast<int>(b);
      pinned_frame = *ctx.pair_marks[s][b];
    }
  }
  for (std::size_t b = 0; b < tmpl.bodies.size(); ++b) {
    const int id = tmpl.bodies[b].id;
    if (ctx.pair_marks[s][b] && static_cast<int>(b) != pinned) {
      theta.push({ParamField::Mass, 0, id}, kDefaultMass, Reparam::ExpPositive);
    }
    if (ctx.marks[s][b]) {
      theta.push({ParamField::Restitution, 0, id}, kDefaultRestitution,
                 Reparam::BoundedSigmoid);
    }
  }
  return theta;
}

/// Full-window loss at a candidate radius assignment, minimized over
/// nuisance mass/restitution. The loss separates over scenes, so each
/// scene's nuisance is fitted independently; every candidate restarts
/// the nuisance from the documented defaults so candidates stay
/// comparable (a warm start lets one grazing-contact candidate poison
/// the rest). Summation runs in fixed scene order.
double scan_loss(const GlobalContext& ctx, const std::map<ShapeKind, double>& radii) {
  double total = 0.0;
  for (std::size_t s = 0; s < ctx.templates.size(); ++s) {
    std::vector<FitScene> scenes(1);
    scenes[0].scene = ctx.templates[s];
    bake_radii(scenes[0].scene, radii);
    scenes[0].observed = (*ctx.observations)[s];
    scenes[0].range = {0, scenes[0].observed.frame_count()};

    ParamVector nuisance = scene_nuisance_params(ctx, s);
    if (nuisance.params.empty()) {
      total += loss_value(scenes, nuisance);
      continue;
    }
    LbfgsOptions opt;
    opt.max_steps = 12;
    opt.threshold = 0.0;
    const LbfgsResult res = lbfgs_minimize(make_objective(scenes, nuisance),
                                           nuisance.unconstrained(), opt);
    total += res.best_loss;
  }
  return total;
}

}  // namespace

GlobalFitResult fit_global(const std::vector<SceneConfig>& templates,
                           const std::vector<Trajectory>& observations,
                           const FitSchedule& schedule) {
  if (templates.empty() || templates.size() != observations.size()) {
    throw DataError("fit_global needs matching non-empty template/observation lists");
  }

  GlobalContext ctx;
  ctx.observations = &observations;
  ctx.templates = templates;
  for (std::size_t s = 0; s < ctx.templates.size(); ++s) {
    seed_states_from_observation(ctx.templates[s], observations[s]);
  }

  // Fixed documented starting points: lambda = 0.1 each, radius = 0.5.
  std::set<ShapeKind> classes;
  std::map<ShapeKind, double> radii;
  for (auto& tmpl : ctx.templates) {
    tmpl.physics.lambda1 = 0.1;
    tmpl.physics.lambda2 = 0.1;
    tmpl.physics.lambda3 = 0.1;
    for (const auto& b : tmpl.bodies) {
      classes.insert(b.params.shape);
      radii[b.params.shape] = kDefaultRadius;
    }
    bake_radii(tmpl, radii);
  }
  recompute_marks(ctx);

  // Structural identifiability from the observations alone.
  bool moving_sphere = false, moving_other = false, any_moving = false;
  std::set<ShapeKind> colliding_classes;
  for (std::size_t s = 0; s < ctx.templates.size(); ++s) {
    const auto& tmpl = ctx.templates[s];
    for (std::size_t b = 0; b < tmpl.bodies.size(); ++b) {
      const auto samples = present_samples(observations[s], static_cast<int>(b),
                                           observations[s].frame_count());
      if (samples.frames.size() >= 2) {
        const double h = tmpl.physics.frame_dt() * (samples.frames[1] - samples.frames[0]);
        const double speed = norm(samples.positions[1] - samples.positions[0]) / h;
        if (speed > kMovingSpeed) {
          any_moving = true;
          (tmpl.bodies[b].params.shape == ShapeKind::Sphere ? moving_sphere
                                                            : moving_other) = true;
        }
      }
      if (ctx.marks[s][b]) colliding_classes.insert(tmpl.bodies[b].params.shape);
    }
  }

  GlobalFitResult result;
  result.flags["lambda1"] = moving_other ? FitFlag::Fitted : FitFlag::Unidentifiable;
  result.flags["lambda2"] = moving_sphere ? FitFlag::Fitted : FitFlag::Unidentifiable;
  result.flags["lambda3"] = any_moving ? FitFlag::Fitted : FitFlag::Unidentifiable;

  // Pass 1: resistance coefficients and states from pre-interaction frames.
  fit_lambdas_and_states(ctx, schedule, moving_other, moving_sphere, any_moving);

  // Pass 2: radius per shape class by coordinate scan. The detection
  // boolean gives the radius no usable gradient, so the scan evaluates the
  // full-window loss directly, re-fitting per-scene mass/restitution as
  // nuisance at every candidate.
  std::vector<ShapeKind> scan_classes(colliding_classes.begin(), colliding_classes.end());
  if (!scan_classes.empty()) {
    // 1-D scan of the masked loss over one radius slot: log grid plus
    // golden-section refinement around the winner.
    auto scan_one = [&](auto&& apply_candidate) {
      const double lo = 0.1, hi = 0.85;
      const int grid = 17;
      auto eval = [&](double r) {
        auto candidate = radii;
        apply_candidate(candidate, r);
        return scan_loss(ctx, candidate);
      };
      double best_r = lo;
      double best_loss = std::numeric_limits<double>::infinity();
      for (int k = 0; k < grid; ++k) {
        const double r = lo * std::pow(hi / lo, static_cast<double>(k) / (grid - 1));
        const double loss = eval(r);
        if (loss < best_loss) {
          best_loss = loss;
          best_r = r;
        }
      }
      const double step = std::pow(hi / lo, 1.0 / (grid - 1));
      double a = best_r / step, b = best_r * step;
      const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
      double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
      double f1 = eval(x1), f2 = eval(x2);
      for (int it = 0; it < 10; ++it) {
        if (f1 < f2) {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - phi * (b - a);
          f1 = eval(x1);
        } else {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + phi * (b - a);
          f2 = eval(x2);
        }
      }
      const double refined = 0.5 * (a + b);
      return eval(refined) <= best_loss ? refined : best_r;
    };

    // Mixed-class collisions constrain mostly the sum of the two radii, a
    // diagonal valley that per-class coordinate steps descend poorly from a
    // distance. A shared-radius pre-scan lands on that diagonal first.
    if (scan_classes.size() > 1) {
      const double shared = scan_one([&](std::map<ShapeKind, double>& cand, double r) {
        for (auto& [cls, value] : cand) value = r;
      });
      for (auto& [cls, value] : radii) value = shared;
      for (auto& tmpl : ctx.templates) bake_radii(tmpl, radii);
    }

    const int rounds = scan_classes.size() > 1 ? 2 : 1;
    for (int round = 0; round < rounds; ++round) {
      for (ShapeKind cls : scan_classes) {
        radii[cls] = scan_one(
            [&](std::map<ShapeKind, double>& cand, double r) { cand[cls] = r; });
        for (auto& tmpl : ctx.templates) bake_radii(tmpl, radii);
      }
    }
  }

  // Pass 3: final lambda/state polish with the fitted radii. Masks stay
  // conservative: a slightly-under-fitted radius must not let post-contact
  // frames leak into the drag windows, so the earlier of the two mark
  // estimates wins.
  const auto marks_before_scan = ctx.marks;
  recompute_marks(ctx);
  for (std::size_t s = 0; s < ctx.marks.size(); ++s) {
    ctx.marks[s] = combine_marks(ctx.marks[s], marks_before_scan[s]);
  }
  result.trace = fit_lambdas_and_states(ctx, schedule, moving_other, moving_sphere,
                                        any_moving);

  result.lambda1 = ctx.templates[0].physics.lambda1;
  result.lambda2 = ctx.templates[0].physics.lambda2;
  result.lambda3 = ctx.templates[0].physics.lambda3;
  for (ShapeKind cls : classes) {
    result.radius[cls] = radii[cls];
    result.flags[std::string("radius.") + shape_name(cls)] =
        colliding_classes.count(cls) ? FitFlag::Fitted : FitFlag::Defaulted;
  }
  return result;
}

InitialFitResult fit_initial(const SceneConfig& tmpl, const Trajectory& observed,
                             const std::vector<std::optional<int>>& first_interaction,
                             const FitSchedule& schedule) {
  InitialFitResult out;
  out.scene = tmpl;
  for (std::size_t b = 0; b < tmpl.bodies.size(); ++b) {
    const int id = tmpl.bodies[b].id;
    const int end = first_interaction[b] ? *first_interaction[b] : observed.frame_count();
    const auto samples = present_samples(observed, static_cast<int>(b), end);
    if (samples.frames.size() < 3) throw InsufficientPreCollisionFrames(id);

    ParamVector theta;
    const Vec2d l0 = samples.positions[0];
    const Vec2d v0 = estimate_v0(samples, tmpl.bodies[b].params.shape, tmpl.physics);
    theta.push({ParamField::PosX, 0, id}, l0.x, Reparam::Identity);
    theta.push({ParamField::PosY, 0, id}, l0.y, Reparam::Identity);
    theta.push({ParamField::VelX, 0, id}, v0.x, Reparam::Identity);
    theta.push({ParamField::VelY, 0, id}, v0.y, Reparam::Identity);

    // Collision-independent by definition: the body is fit alone, with
    // contact handling off, against its own pre-interaction samples.
    std::vector<FitScene> scenes(1);
    scenes[0].scene = out.scene;
    scenes[0].scene.bodies.clear();
    scenes[0].scene.bodies.push_back(out.scene.bodies[b]);
    scenes[0].observed = observed;
    scenes[0].range = {0, std::max(end, 1)};
    scenes[0].mask.bodies = {id};
    scenes[0].mask.body_end_frame[id] = end;
    scenes[0].contacts = false;

    LbfgsOptions opt;
    opt.max_steps = schedule.max_steps;
    opt.threshold = schedule.initial_state_threshold;
    const LbfgsResult res = lbfgs_minimize(make_objective(scenes, theta),
                                           theta.unconstrained(), opt);
    theta.set_unconstrained(res.best_x);
    out.scene.bodies[b].state.pos = {theta.physical(0), theta.physical(1)};
    out.scene.bodies[b].state.vel = {theta.physical(2), theta.physical(3)};
    out.traces[id] = res.trace;
    out.flags[body_label("l0", id)] = FitFlag::Fitted;
    out.flags[body_label("v0", id)] = FitFlag::Fitted;

    // BEV positions carry no pre-contact angle signal; cube angles are
    // seeded from observed angle samples instead of optimized.
    auto& body = out.scene.bodies[b];
    if (body.params.shape == ShapeKind::Cube && samples.alphas.size() >= 2) {
      body.state.angle = samples.alphas[0];
      const double h = tmpl.physics.frame_dt() * (samples.frames[1] - samples.frames[0]);
      body.state.omega = (samples.alphas[1] - samples.alphas[0]) / h;
      out.flags[body_label("alpha0", id)] = FitFlag::FromObservation;
      out.flags[body_label("omega0", id)] = FitFlag::FromObservation;
    }
  }
  return out;
}

namespace {

struct CollisionParamSetup {
  ParamVector theta;
  std::map<std::string, FitFlag> flags;
  int pinned_body = -1;
  SceneConfig scene;
};

CollisionParamSetup collision_setup(const SceneConfig& scene_with_states,
                                    const std::vector<std::optional<int>>& pair_marks,
                                    const std::vector<std::optional<int>>& wall_marks) {
  CollisionParamSetup setup;
  setup.scene = scene_with_states;

  int pinned_index = -1;
  int pinned_frame = -1;
  for (std::size_t b = 0; b < setup.scene.bodies.size(); ++b) {
    if (pair_marks[b] && (pinned_index < 0 || *pair_marks[b] < pinned_frame)) {
      pinned_index = static_cast<int>(b);
      pinned_frame = *pair_marks[b];
    }
  }

  for (std::size_t b = 0; b < setup.scene.bodies.size(); ++b) {
    auto& body = setup.scene.bodies[b];
    const int id = body.id;
    const bool pair_marked = pair_marks[b].has_value();
    const bool any_marked = pair_marked || wall_marks[b].has_value();

    if (static_cast<int>(b) == pinned_index) {
      body.params.mass = 1.0;  // gauge: only mass ratios are observable
      setup.pinned_body = id;
      setup.flags[body_label("mass", id)] = FitFlag::Pinned;
    } else if (pair_marked) {
      body.params.mass = kDefaultMass;
      setup.theta.push({ParamField::Mass, 0, id}, kDefaultMass, Reparam::ExpPositive);
      setup.flags[body_label("mass", id)] = FitFlag::Fitted;
    } else {
      body.params.mass = kDefaultMass;
      setup.flags[body_label("mass", id)] = FitFlag::Defaulted;
    }

    if (any_marked) {
      body.params.restitution = kDefaultRestitution;
      setup.theta.push({ParamField::Restitution, 0, id}, kDefaultRestitution,
                       Reparam::BoundedSigmoid);
      setup.flags[body_label("restitution", id)] = FitFlag::Fitted;
    } else {
      body.params.restitution = kDefaultRestitution;
      setup.flags[body_label("restitution", id)] = FitFlag::Defaulted;
    }
  }
  return setup;
}

}  // namespace

CollisionFitResult fit_collision_params(const SceneConfig& scene_with_states,
                                        const Trajectory& observed,
                                        const std::vector<std::optional<int>>& pair_marks,
                                        const std::vector<std::optional<int>>& wall_marks,
                                        const FitSchedule& schedule) {
  CollisionParamSetup setup = collision_setup(scene_with_states, pair_marks, wall_marks);
  CollisionFitResult out;
  out.flags = setup.flags;
  out.pinned_body = setup.pinned_body;

  if (setup.theta.params.empty()) {
    out.scene = setup.scene;
    return out;
  }

  for (std::size_t stage = 0; stage < schedule.curriculum.size(); ++stage) {
    FrameRange window = schedule.curriculum[stage];
    window.end = std::min(window.end, observed.frame_count());

    std::vector<FitScene> scenes(1);
    scenes[0].scene = setup.scene;
    scenes[0].observed = observed;
    scenes[0].range = window;

    LbfgsOptions opt;
    opt.max_steps = schedule.max_steps;
    opt.threshold = schedule.curriculum_thresholds[stage];
    const LbfgsResult res = lbfgs_minimize(make_objective(scenes, setup.theta),
                                           setup.theta.unconstrained(), opt);
    setup.theta.set_unconstrained(res.best_x);  // warm-start the next window
    out.traces.push_back(res.trace);
  }

  out.scene = scene_with_params(setup.scene, setup.theta, 0);
  return out;
}

CollisionFitResult fit_collision_direct(const SceneConfig& scene_with_states,
                                        const Trajectory& observed,
                                        const std::vector<std::optional<int>>& pair_marks,
                                        const std::vector<std::optional<int>>& wall_marks,
                                        const FitSchedule& schedule, int step_budget) {
  CollisionParamSetup setup = collision_setup(scene_with_states, pair_marks, wall_marks);
  CollisionFitResult out;
  out.flags = setup.flags;
  out.pinned_body = setup.pinned_body;
  if (setup.theta.params.empty()) {
    out.scene = setup.scene;
    return out;
  }

  FrameRange window = schedule.curriculum.back();
  window.end = std::min(window.end, observed.frame_count());
  std::vector<FitScene> scenes(1);
  scenes[0].scene = setup.scene;
  scenes[0].observed = observed;
  scenes[0].range = window;

  LbfgsOptions opt;
  opt.max_steps = step_budget;
  opt.threshold = schedule.curriculum_thresholds.back();
  const LbfgsResult res = lbfgs_minimize(make_objective(scenes, setup.theta),
                                         setup.theta.unconstrained(), opt);
  setup.theta.set_unconstrained(res.best_x);
  out.traces.push_back(res.trace);
  out.scene = scene_with_params(setup.scene, setup.theta, 0);
  return out;
}

RefitResult refit_for_prediction(const SceneConfig& fitted, const Trajectory& observed,
                                 const std::vector<std::optional<int>>& pair_marks,
                                 const std::vector<std::optional<int>>& wall_marks,
                                 const FitSchedule& schedule) {
  const int frames = observed.frame_count();
  if (frames < schedule.prediction_refit_frames) {
    throw DataError("refit_for_prediction needs at least " +
                    std::to_string(schedule.prediction_refit_frames) + " observed frames");
  }

  ParamVector theta;
  int pinned_index = -1;
  int pinned_frame = -1;
  for (std::size_t b = 0; b < fitted.bodies.size(); ++b) {
    if (pair_marks[b] && (pinned_index < 0 || *pair_marks[b] < pinned_frame)) {
      pinned_index = static_cast<int>(b);
      pinned_frame = *pair_marks[b];
    }
  }
  for (std::size_t b = 0; b < fitted.bodies.size(); ++b) {
    const auto& body = fitted.bodies[b];
    theta.push({ParamField::PosX, 0, body.id}, body.state.pos.x, Reparam::Identity);
    theta.push({ParamField::PosY, 0, body.id}, body.state.pos.y, Reparam::Identity);
    theta.push({ParamField::VelX, 0, body.id}, body.state.vel.x, Reparam::Identity);
    theta.push({ParamField::VelY, 0, body.id}, body.state.vel.y, Reparam::Identity);
    if (pair_marks[b] && static_cast<int>(b) != pinned_index) {
      theta.push({ParamField::Mass, 0, body.id}, body.params.mass, Reparam::ExpPositive);
    }
    if (pair_marks[b] || wall_marks[b]) {
      theta.push({ParamField::Restitution, 0, body.id}, body.params.restitution,
                 Reparam::BoundedSigmoid);
    }
  }

  std::vector<FitScene> scenes(1);
  scenes[0].scene = fitted;
  scenes[0].observed = observed;
  scenes[0].range = {frames - schedule.prediction_refit_frames, frames};

  LbfgsOptions opt;
  opt.max_steps = schedule.max_steps;
  opt.threshold = schedule.initial_state_threshold;
  const LbfgsResult res = lbfgs_minimize(make_objective(scenes, theta),
                                         theta.unconstrained(), opt);
  theta.set_unconstrained(res.best_x);

  RefitResult out;
  out.scene = scene_with_params(fitted, theta, 0);
  out.trace = res.trace;
  return out;
}

FitReport identify_scene(const SceneConfig& tmpl, const Trajectory& observed,
                         const GlobalFitResult* globals, const FitSchedule& schedule,
                         const StageSelection& stages) {
  using Clock = std::chrono::steady_clock;
  FitReport report;

  SceneConfig scene = tmpl;
  if (globals) {
    scene.physics.lambda1 = globals->lambda1;
    scene.physics.lambda2 = globals->lambda2;
    scene.physics.lambda3 = globals->lambda3;
    for (auto& b : scene.bodies) {
      auto it = globals->radius.find(b.params.shape);
      if (it != globals->radius.end()) b.params.radius = it->second;
    }
    for (const auto& [k, v] : globals->flags) report.flags[k] = fit_flag_name(v);
  } else {
    for (const char* k : {"lambda1", "lambda2", "lambda3"}) {
      report.flags[k] = fit_flag_name(FitFlag::FromTemplate);
    }
  }

  std::vector<double> radii;
  for (const auto& b : scene.bodies) radii.push_back(b.params.radius);
  const auto pair_marks = mark_first_collisions(observed, radii);
  const auto wall_marks = mark_first_wall_contacts(observed, radii, scene.walls);
  const auto marks = combine_marks(pair_marks, wall_marks);
  report.first_collisions = pair_marks;

  if (stages.initial) {
    const auto t0 = Clock::now();
    InitialFitResult init = fit_initial(scene, observed, marks, schedule);
    scene = init.scene;
    for (const auto& [id, trace] : init.traces) {
      report.stage_traces["initial.b" + std::to_string(id)] = trace;
    }
    for (const auto& [k, v] : init.flags) report.flags[k] = fit_flag_name(v);
    report.stage_seconds["initial"] =
        std::chrono::duration<double>(Clock::now() - t0).count();
  }

  if (stages.collision) {
    const auto t0 = Clock::now();
    CollisionFitResult col =
        fit_collision_params(scene, observed, pair_marks, wall_marks, schedule);
    scene = col.scene;
    for (std::size_t w = 0; w < col.traces.size(); ++w) {
      report.stage_traces["collision.w" + std::to_string(w)] = col.traces[w];
    }
    for (const auto& [k, v] : col.flags) report.flags[k] = fit_flag_name(v);
    report.stage_seconds["collision"] =
        std::chrono::duration<double>(Clock::now() - t0).count();
  }

  report.fitted = scene;
  report.refit_scene = scene;

  if (stages.refit && observed.frame_count() >= schedule.prediction_refit_frames) {
    const auto t0 = Clock::now();
    RefitResult refit =
        refit_for_prediction(scene, observed, pair_marks, wall_marks, schedule);
    report.refit_scene = refit.scene;
    report.stage_traces["refit"] = refit.trace;
    report.stage_seconds["refit"] =
        std::chrono::duration<double>(Clock::now() - t0).count();
  }
  return report;
}

SceneConfig advance_to_frame(const SceneConfig& scene, int frame) {
  SceneConfig out = scene;
  if (frame <= 0) return out;
  auto world = make_sim_world<double>(scene);
  for (int f = 0; f < frame; ++f) {
    for (int s = 0; s < world.physics.substeps_per_frame; ++s) {
      step_world(world, f * world.physics.substeps_per_frame + s, nullptr);
    }
  }
  for (std::size_t b = 0; b < out.bodies.size(); ++b) {
    out.bodies[b].state.pos = world.bodies[b].pos;
    out.bodies[b].state.vel = world.bodies[b].vel;
    out.bodies[b].state.angle = world.bodies[b].angle;
    out.bodies[b].state.omega = world.bodies[b].omega;
  }
  return out;
}

double rollout_mse(const Trajectory& rollout, const Trajectory& reference, int begin,
                   int end) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& ref_frame : reference.frames) {
    if (ref_frame.frame < begin || ref_frame.frame >= end) continue;
    if (ref_frame.frame >= rollout.frame_count()) continue;
    const auto& roll_frame = rollout.frames[ref_frame.frame];
    for (const auto& ref_body : ref_frame.bodies) {
      for (const auto& roll_body : roll_frame.bodies) {
        if (roll_body.id != ref_body.id) continue;
        const double dx = roll_body.x - ref_body.x;
        const double dy = roll_body.y - ref_body.y;
        total += dx * dx + dy * dy;
        ++count;
        break;
      }
    }
  }
  return count > 0 ? total / static_cast<double>(count) : 0.0;
}

}  // namespace bevsim
