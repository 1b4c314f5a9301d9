// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion. Exits non-zero if any criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bevsim/collision.hpp"
#include "bevsim/dynamics.hpp"
#include "bevsim/executor.hpp"
#include "bevsim/gradients.hpp"
#include "bevsim/identify.hpp"
#include "bevsim/json_io.hpp"
#include "bevsim/projection.hpp"
#include "bevsim/synth.hpp"
#include "test_helpers.hpp"

using namespace bevsim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::vector<std::string> notes;

  void require(bool condition, const std::string& what) {
    if (!condition) {
      ok = false;
      notes.push_back("FAILED: " + what);
    }
  }
  void note(const std::string& what) { notes.push_back(what); }
};

double now_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

// ---------------------------------------------------------------------------
// Criteria 1-3: impulse conservation laws and the elastic oracle
// ---------------------------------------------------------------------------

void criterion_momentum_energy(Check& momentum, Check& energy) {
  std::mt19937_64 rng(424242);
  std::uniform_real_distribution<double> mass(0.5, 5.0);
  std::uniform_real_distribution<double> rest(0.3, 1.0);
  std::uniform_real_distribution<double> vel(-4.0, 4.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);

  double max_dp = 0.0;
  double max_energy_gain = 0.0;
  double max_elastic_drift = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double m1 = mass(rng), m2 = mass(rng);
    const double r1 = rest(rng), r2 = rest(rng);
    const Vec2d v1{vel(rng), vel(rng)};
    const Vec2d v2{vel(rng), vel(rng)};
    ContactT<double> contact;
    const double a = angle(rng);
    contact.normal = {std::cos(a), std::sin(a)};

    const auto r = resolve_impulse(contact, m1, r1, v1, m2, r2, v2);
    max_dp = std::max({max_dp, std::abs(m1 * r.dv_i.x + m2 * r.dv_j.x),
                       std::abs(m1 * r.dv_i.y + m2 * r.dv_j.y)});

    const double before = 0.5 * m1 * norm_squared(v1) + 0.5 * m2 * norm_squared(v2);
    const double after = 0.5 * m1 * norm_squared(v1 + r.dv_i) +
                         0.5 * m2 * norm_squared(v2 + r.dv_j);
    if (r1 * r2 <= 1.0) max_energy_gain = std::max(max_energy_gain, after - before);

    // Elastic subset: product exactly one conserves energy.
    const auto re = resolve_impulse(contact, m1, 1.0, v1, m2, 1.0, v2);
    const double after_e = 0.5 * m1 * norm_squared(v1 + re.dv_i) +
                           0.5 * m2 * norm_squared(v2 + re.dv_j);
    max_elastic_drift = std::max(max_elastic_drift, std::abs(after_e - before));
  }
  momentum.require(max_dp < 1e-9, "max momentum residual " + std::to_string(max_dp));
  momentum.note("max |m_i dv_i + m_j dv_j| = " + std::to_string(max_dp));
  energy.require(max_energy_gain < 1e-9,
                 "energy gain " + std::to_string(max_energy_gain));
  energy.require(max_elastic_drift < 1e-9,
                 "elastic drift " + std::to_string(max_elastic_drift));
}

void criterion_elastic_oracle(Check& c) {
  ContactT<double> contact;
  contact.normal = {-1.0, 0.0};
  const auto swap = resolve_impulse<double>(contact, 1.0, 1.0, {1.0, 0.0}, 1.0, 1.0,
                                            {-1.0, 0.0});
  c.require(std::abs(1.0 + swap.dv_i.x - (-1.0)) < 1e-12, "equal-mass swap, left body");
  c.require(std::abs(-1.0 + swap.dv_j.x - 1.0) < 1e-12, "equal-mass swap, right body");

  const auto two = resolve_impulse<double>(contact, 1.0, 1.0, {3.0, 0.0}, 2.0, 1.0,
                                           {0.0, 0.0});
  c.require(std::abs(3.0 + two.dv_i.x - (-1.0)) < 1e-12, "1:2 mass case, body 1");
  c.require(std::abs(two.dv_j.x - 2.0) < 1e-12, "1:2 mass case, body 2");
}

// ---------------------------------------------------------------------------
// Criterion 4: RK2 order
// ---------------------------------------------------------------------------

void criterion_integrator_order(Check& c) {
  const struct {
    ShapeKind shape;
    Vec2d v0;
    double l1, l2, l3;
  } cases[] = {
      {ShapeKind::Cube, {2.5, 1.5}, 0.12, 0.0, 0.03},
      {ShapeKind::Sphere, {-3.0, 0.5}, 0.0, 0.05, 0.02},
      {ShapeKind::Cylinder, {1.0, -2.0}, 0.08, 0.0, 0.05},
  };
  for (const auto& k : cases) {
    SceneConfig scene = test::sliding_body(k.shape, k.v0, k.l1, k.l2, k.l3);
    auto final_pos = [&](double dt_scale, int substep_scale) {
      SceneConfig s = scene;
      s.physics.dt *= dt_scale;
      s.physics.substeps_per_frame *= substep_scale;
      const auto r = simulate(s, 32);
      const auto& last = r.trajectory.frames.back().bodies[0];
      return Vec2d{last.x, last.y};
    };
    const Vec2d ref = final_pos(0.01, 100);
    const double e1 = norm(final_pos(1.0, 1) - ref);
    const double e2 = norm(final_pos(0.5, 2) - ref);
    const double ratio = e1 / e2;
    c.require(ratio >= 3.5 && ratio <= 4.5,
              std::string(shape_name(k.shape)) + " ratio " + std::to_string(ratio));
    c.note(std::string(shape_name(k.shape)) + " error ratio " + std::to_string(ratio));
  }
}

// ---------------------------------------------------------------------------
// Criterion 5: gradient correctness
// ---------------------------------------------------------------------------

std::vector<std::tuple<int, int, int>> contact_onsets(
    const std::vector<ContactRecord>& contacts) {
  std::vector<std::tuple<int, int, int>> sig;
  std::map<std::pair<int, int>, int> last;
  for (const auto& rec : contacts) {
    if (rec.j < 0) continue;
    const std::pair<int, int> key{rec.i, rec.j};
    auto it = last.find(key);
    if (it == last.end() || rec.substep > it->second + 1) {
      sig.push_back({rec.substep, rec.i, rec.j});
    }
    last[key] = rec.substep;
  }
  return sig;
}

void criterion_gradients(Check& c) {
  // Contact-free scenes: 1e-6 relative agreement.
  int free_count = 0;
  for (std::uint64_t seed = 100; free_count < 20 && seed < 200; ++seed) {
    GeneratorSpec spec;
    spec.seed = seed;
    spec.min_bodies = 1;
    spec.max_bodies = 2;
    spec.frames = 48;
    spec.future_frames = 0;
    spec.require_collision = false;
    GeneratedScene g;
    try {
      g = generate_scene(spec);
    } catch (const GenerationExhausted&) {
      continue;
    }
    if (!contact_onsets(g.contacts).empty()) continue;
    ++free_count;

    SceneConfig tmpl = g.scene;
    tmpl.bodies[0].state.vel.x += 0.07;  // move off the minimum
    tmpl.physics.lambda2 *= 1.3;

    ParamVector theta;
    theta.push({ParamField::VelX, 0, 0}, tmpl.bodies[0].state.vel.x, Reparam::Identity);
    theta.push({ParamField::PosY, 0, 0}, tmpl.bodies[0].state.pos.y, Reparam::Identity);
    theta.push({ParamField::Lambda2, 0, -1}, tmpl.physics.lambda2, Reparam::ExpPositive);
    theta.push({ParamField::Lambda3, 0, -1}, tmpl.physics.lambda3, Reparam::ExpPositive);

    std::vector<FitScene> scenes(1);
    scenes[0].scene = tmpl;
    scenes[0].observed = observe(g, spec);
    scenes[0].range = {0, 48};

    const GradResult grad = grad_loss(scenes, theta);
    const auto fd = finite_diff_grad(scenes, theta, 1e-6);
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double rel = test::relative_error(grad.grad[k], fd[k]);
      c.require(rel < 1e-6, "contact-free seed " + std::to_string(seed) + " param " +
                                theta.params[k].id.label() + " rel " +
                                std::to_string(rel));
    }
  }
  c.require(free_count == 20, "found only " + std::to_string(free_count) +
                                  " contact-free scenes");

  // One-collision scenes with verified fixed topology: 1e-2 relative.
  int col_count = 0;
  const double h = 1e-6;
  for (std::uint64_t seed = 500; col_count < 20 && seed < 700; ++seed) {
    GeneratorSpec spec;
    spec.seed = seed;
    spec.min_bodies = 2;
    spec.max_bodies = 2;
    spec.frames = 48;
    spec.future_frames = 0;
    spec.min_precollision_frames = 8;
    GeneratedScene g;
    try {
      g = generate_scene(spec);
    } catch (const GenerationExhausted&) {
      continue;
    }
    const auto base_sig = contact_onsets(g.contacts);
    if (base_sig.size() != 1) continue;

    SceneConfig tmpl = g.scene;
    ParamVector theta;
    theta.push({ParamField::VelX, 0, 0}, tmpl.bodies[0].state.vel.x, Reparam::Identity);
    theta.push({ParamField::Mass, 0, 1}, tmpl.bodies[1].params.mass, Reparam::ExpPositive);
    theta.push({ParamField::Restitution, 0, 1}, tmpl.bodies[1].params.restitution,
               Reparam::BoundedSigmoid);

    // The harness verifies the contact sequence stays fixed under +-h
    // before asserting; knife-edge seeds are skipped.
    auto signature = [&](const ParamVector& t) {
      const auto sim = simulate(scene_with_params(tmpl, t, 0), 48);
      return contact_onsets(sim.contacts);
    };
    bool stable = true;
    ParamVector probe = theta;
    for (std::size_t k = 0; k < theta.size() && stable; ++k) {
      for (double sign : {1.0, -1.0}) {
        probe.params[k].u = theta.params[k].u + sign * h;
        if (signature(probe) != base_sig) stable = false;
        probe.params[k].u = theta.params[k].u;
      }
    }
    if (!stable) continue;
    ++col_count;

    // Observations from perturbed truth so the loss is not at its minimum.
    SceneConfig truth = g.scene;
    truth.bodies[0].state.vel.x += 0.04;
    truth.bodies[1].params.mass *= 1.15;
    std::vector<FitScene> scenes(1);
    scenes[0].scene = tmpl;
    scenes[0].observed = simulate(truth, 48).trajectory;
    scenes[0].range = {0, 48};

    const GradResult grad = grad_loss(scenes, theta);
    const auto fd = finite_diff_grad(scenes, theta, h);
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double rel = test::relative_error(grad.grad[k], fd[k]);
      c.require(rel < 1e-2, "one-collision seed " + std::to_string(seed) + " param " +
                                theta.params[k].id.label() + " rel " +
                                std::to_string(rel));
    }
  }
  c.require(col_count == 20, "found only " + std::to_string(col_count) +
                                 " stable one-collision scenes");
}

// ---------------------------------------------------------------------------
// Criteria 6-9: parameter recovery, data efficiency, curriculum, refit
// ---------------------------------------------------------------------------

GeneratorSpec recovery_spec(std::uint64_t seed) {
  GeneratorSpec spec;
  spec.seed = seed;
  spec.min_bodies = 2;
  spec.max_bodies = 3;
  spec.frames = 128;
  spec.future_frames = 20;
  spec.require_collision_per_body = true;
  spec.min_precollision_frames = 20;
  return spec;
}

SceneConfig strip(const SceneConfig& truth) {
  SceneConfig tmpl = truth;
  for (auto& b : tmpl.bodies) {
    b.state = BodyState{};
    b.params.mass = 1.0;
    b.params.restitution = 0.8;
  }
  return tmpl;
}

int pinned_index(const FitReport& report) {
  for (const auto& [key, flag] : report.flags) {
    if (flag == "pinned") {
      return std::stoi(key.substr(key.find(".b") + 2));
    }
  }
  return 0;
}

struct RecoveryData {
  std::vector<GeneratedScene> scenes;
  std::vector<Trajectory> observations;
  GlobalFitResult globals;
};

RecoveryData recovery_data;  // shared between criteria 6 and 7

void criterion_recovery(Check& c) {
  auto& data = recovery_data;
  for (std::uint64_t seed = 1000; data.scenes.size() < 20 && seed < 1200; ++seed) {
    try {
      const GeneratorSpec spec = recovery_spec(seed);
      GeneratedScene g = generate_scene(spec);
      data.observations.push_back(observe(g, spec));
      data.scenes.push_back(std::move(g));
    } catch (const GenerationExhausted&) {
    }
  }
  c.require(data.scenes.size() == 20, "could not generate 20 recovery scenes");

  // Stage 1 jointly over K = 10 scenes.
  std::vector<SceneConfig> templates;
  std::vector<Trajectory> first_ten;
  for (int k = 0; k < 10; ++k) {
    templates.push_back(strip(data.scenes[k].scene));
    first_ten.push_back(data.observations[k]);
  }
  data.globals = fit_global(templates, first_ten, {});

  const GlobalPhysics truth_phys = data.scenes[0].scene.physics;
  const double e1 = test::relative_error(data.globals.lambda1, truth_phys.lambda1);
  const double e2 = test::relative_error(data.globals.lambda2, truth_phys.lambda2);
  const double e3 = test::relative_error(data.globals.lambda3, truth_phys.lambda3);
  c.require(e1 < 0.05, "lambda1 err " + std::to_string(e1));
  c.require(e2 < 0.05, "lambda2 err " + std::to_string(e2));
  c.require(e3 < 0.05, "lambda3 err " + std::to_string(e3));
  c.note("lambda rel errors: " + std::to_string(e1) + " " + std::to_string(e2) + " " +
         std::to_string(e3));

  // K = 10 noiseless also pins lambdas and radii to 2%.
  double worst_radius = 0.0;
  for (const auto& [shape, r] : data.globals.radius) {
    const double err = test::relative_error(r, recovery_spec(0).radius.at(shape));
    worst_radius = std::max(worst_radius, err);
    c.note(std::string("radius.") + shape_name(shape) + " rel err " + std::to_string(err));
  }
  c.require(worst_radius < 0.02, "radius err " + std::to_string(worst_radius));
  c.require(std::max({e1, e2, e3}) < 0.02, "lambda errors above the 2% example bound");

  // Stages 2-3 per scene with the fitted globals.
  StageSelection stages;
  stages.global = false;
  stages.refit = false;
  int checked = 0;
  for (std::size_t s = 0; s < data.scenes.size(); ++s) {
    const auto& g = data.scenes[s];
    const FitReport report =
        identify_scene(strip(g.scene), data.observations[s], &data.globals, {}, stages);

    for (std::size_t b = 0; b < g.scene.bodies.size(); ++b) {
      const double dvx =
          report.fitted.bodies[b].state.vel.x - g.scene.bodies[b].state.vel.x;
      const double dvy =
          report.fitted.bodies[b].state.vel.y - g.scene.bodies[b].state.vel.y;
      c.require(std::abs(dvx) < 1e-3, "scene " + std::to_string(s) + " body " +
                                          std::to_string(b) + " v0x err " +
                                          std::to_string(dvx));
      c.require(std::abs(dvy) < 1e-3, "scene " + std::to_string(s) + " body " +
                                          std::to_string(b) + " v0y err " +
                                          std::to_string(dvy));
    }

    const int pin = report.fitted.body_index(pinned_index(report));
    for (std::size_t b = 0; b < g.scene.bodies.size(); ++b) {
      const std::string key = "mass.b" + std::to_string(g.scene.bodies[b].id);
      if (report.flags.at(key) != "fitted") continue;
      const double fitted_ratio =
          report.fitted.bodies[b].params.mass / report.fitted.bodies[pin].params.mass;
      const double true_ratio =
          g.scene.bodies[b].params.mass / g.scene.bodies[pin].params.mass;
      const double err = test::relative_error(fitted_ratio, true_ratio);
      c.require(err < 0.05,
                "scene " + std::to_string(s) + " mass ratio err " + std::to_string(err));
      ++checked;

      const double fitted_prod = report.fitted.bodies[b].params.restitution *
                                 report.fitted.bodies[pin].params.restitution;
      const double true_prod = g.scene.bodies[b].params.restitution *
                               g.scene.bodies[pin].params.restitution;
      const double perr = test::relative_error(fitted_prod, true_prod);
      c.require(perr < 0.05, "scene " + std::to_string(s) + " restitution product err " +
                                 std::to_string(perr));
    }
  }
  c.note("checked " + std::to_string(checked) + " mass ratios across 20 scenes");
}

void criterion_single_scene(Check& c) {
  const auto& g = recovery_data.scenes[0];
  const auto& obs = recovery_data.observations[0];

  const GlobalFitResult globals = fit_global({strip(g.scene)}, {obs}, {});
  StageSelection stages;
  stages.global = false;
  stages.refit = false;
  const FitReport report = identify_scene(strip(g.scene), obs, &globals, {}, stages);

  for (std::size_t b = 0; b < g.scene.bodies.size(); ++b) {
    const double dvx = report.fitted.bodies[b].state.vel.x - g.scene.bodies[b].state.vel.x;
    const double dvy = report.fitted.bodies[b].state.vel.y - g.scene.bodies[b].state.vel.y;
    c.require(std::abs(dvx) < 1e-2, "v0x err " + std::to_string(dvx));
    c.require(std::abs(dvy) < 1e-2, "v0y err " + std::to_string(dvy));
  }
  const int pin = report.fitted.body_index(pinned_index(report));
  for (std::size_t b = 0; b < g.scene.bodies.size(); ++b) {
    const std::string key = "mass.b" + std::to_string(g.scene.bodies[b].id);
    if (report.flags.at(key) != "fitted") continue;
    const double fitted_ratio =
        report.fitted.bodies[b].params.mass / report.fitted.bodies[pin].params.mass;
    const double true_ratio =
        g.scene.bodies[b].params.mass / g.scene.bodies[pin].params.mass;
    const double err = test::relative_error(fitted_ratio, true_ratio);
    c.require(err < 0.10, "K=1 mass ratio err " + std::to_string(err));
    c.note("K=1 mass ratio rel err " + std::to_string(err));
  }
}

void criterion_curriculum(Check& c) {
  int wins = 0, total = 0;
  for (std::size_t s = 0; s < recovery_data.scenes.size(); ++s) {
    const auto& g = recovery_data.scenes[s];
    const auto& obs = recovery_data.observations[s];

    std::vector<double> radii;
    for (const auto& b : g.scene.bodies) radii.push_back(b.params.radius);
    const auto pair_marks = mark_first_collisions(obs, radii);
    const auto wall_marks = mark_first_wall_contacts(obs, radii, g.scene.walls);
    const auto marks = combine_marks(pair_marks, wall_marks);

    const FitSchedule schedule;
    const InitialFitResult init = fit_initial(strip(g.scene), obs, marks, schedule);

    const auto staged =
        fit_collision_params(init.scene, obs, pair_marks, wall_marks, schedule);
    const int budget =
        schedule.max_steps * static_cast<int>(schedule.curriculum.size());
    const auto direct = fit_collision_direct(init.scene, obs, pair_marks, wall_marks,
                                             schedule, budget);

    // Final full-window loss for both strategies.
    FrameRange window{0, std::min(128, obs.frame_count())};
    std::vector<FitScene> eval(1);
    eval[0].observed = obs;
    eval[0].range = window;
    ParamVector empty;
    eval[0].scene = staged.scene;
    const double staged_loss = loss_value(eval, empty);
    eval[0].scene = direct.scene;
    const double direct_loss = loss_value(eval, empty);

    ++total;
    if (staged_loss <= direct_loss * (1.0 + 1e-12)) ++wins;
  }
  c.note("curriculum <= direct on " + std::to_string(wins) + "/" + std::to_string(total));
  c.require(wins * 10 >= total * 7, "curriculum won only " + std::to_string(wins) + "/" +
                                        std::to_string(total));
}

void criterion_refit_trend(Check& c) {
  int wins = 0, total = 0;
  double mean_with = 0.0, mean_without = 0.0;
  for (std::uint64_t seed = 3000; total < 20 && seed < 3200; ++seed) {
    GeneratorSpec spec = recovery_spec(seed);
    spec.noise_sigma = 0.01;
    GeneratedScene g;
    try {
      g = generate_scene(spec);
    } catch (const GenerationExhausted&) {
      continue;
    }
    const Trajectory obs = observe(g, spec);
    const int frames = obs.frame_count();

    StageSelection stages;
    stages.global = false;
    stages.refit = false;
    FitReport report;
    try {
      report = identify_scene(strip(g.scene), obs, nullptr, {}, stages);
    } catch (const InsufficientPreCollisionFrames&) {
      continue;
    }

    std::vector<double> radii;
    for (const auto& b : g.scene.bodies) radii.push_back(b.params.radius);
    const auto pair_marks = mark_first_collisions(obs, radii);
    const auto wall_marks = mark_first_wall_contacts(obs, radii, g.scene.walls);
    const RefitResult refit =
        refit_for_prediction(report.fitted, obs, pair_marks, wall_marks, {});

    // 20-frame future rollouts, with and without the refit.
    auto future_error = [&](const SceneConfig& fitted_scene) {
      const SceneConfig at_end = advance_to_frame(fitted_scene, frames - 1);
      SimulationResult rolled = simulate(at_end, 20);
      Trajectory shifted = rolled.trajectory;
      for (auto& f : shifted.frames) f.frame += frames - 1;
      return rollout_mse(shifted, g.trajectory, frames, frames + 20);
    };
    const double without = future_error(report.fitted);
    const double with_refit = future_error(refit.scene);
    mean_without += without;
    mean_with += with_refit;
    ++total;
    if (with_refit <= without) ++wins;
  }
  mean_with /= std::max(total, 1);
  mean_without /= std::max(total, 1);
  c.note("refit reduced future error on " + std::to_string(wins) + "/" +
         std::to_string(total) + " scenes (mean " + std::to_string(mean_with) + " vs " +
         std::to_string(mean_without) + ")");
  c.require(total == 20, "only " + std::to_string(total) + " noisy scenes evaluated");
  c.require(wins * 10 >= total * 7,
            "refit won only " + std::to_string(wins) + "/" + std::to_string(total));
  c.require(mean_with <= mean_without, "refit did not reduce the mean error");
}

// ---------------------------------------------------------------------------
// Criterion 10: billiards S1/S2
// ---------------------------------------------------------------------------

void criterion_billiards(Check& c) {
  const int t_frames = 20;
  int passes = 0, total = 0;
  for (std::uint64_t seed = 1; total < 20 && seed < 60; ++seed) {
    const SceneConfig truth = make_billiards(seed);
    const SimulationResult sim = simulate(truth, 2 * t_frames);

    GeneratedScene g;
    g.scene = truth;
    g.trajectory = sim.trajectory;
    g.observed_frames = t_frames;
    GeneratorSpec noise_spec;
    noise_spec.seed = seed;
    noise_spec.noise_sigma = 0.005;
    noise_spec.frames = t_frames;
    const Trajectory obs = observe(g, noise_spec);

    StageSelection stages;
    stages.global = false;
    FitReport report;
    try {
      report = identify_scene(strip(truth), obs, nullptr, {}, stages);
    } catch (const InsufficientPreCollisionFrames&) {
      continue;  // the paper's acknowledged failure mode; not a usable seed
    }
    ++total;

    const SimulationResult s1 = simulate(report.fitted, t_frames - 1);
    const double s1_err = rollout_mse(s1.trajectory, sim.trajectory, 0, t_frames);

    const SceneConfig at_end = advance_to_frame(report.refit_scene, t_frames - 1);
    SimulationResult s2 = simulate(at_end, t_frames);
    Trajectory s2_abs = s2.trajectory;
    for (auto& f : s2_abs.frames) f.frame += t_frames - 1;
    const double s2_err = rollout_mse(s2_abs, sim.trajectory, t_frames, 2 * t_frames);

    if (s2_err <= 4.0 * s1_err) ++passes;
  }
  c.note("S2 <= 4 x S1 on " + std::to_string(passes) + "/" + std::to_string(total) +
         " seeds");
  c.require(total == 20, "only " + std::to_string(total) + " billiard seeds evaluated");
  c.require(passes * 10 >= total * 7,
            "billiards ratio held on only " + std::to_string(passes) + "/" +
                std::to_string(total));
}

// ---------------------------------------------------------------------------
// Criterion 11: executor vs brute-force enumerator
// ---------------------------------------------------------------------------

/// Independent view of a scene's ground truth, computed directly from the
/// generator's stored rollout with flat scans (no executor machinery).
struct OracleView {
  const GeneratedScene& g;
  int clip;     // observed frames
  int horizon;  // predictive frames

  OracleView(const GeneratedScene& gen, int observed, int future)
      : g(gen), clip(observed), horizon(future) {}

  struct SimpleEvent {
    std::string kind;
    int frame;
    std::vector<int> participants;
  };

  static void collect_collisions(const std::vector<ContactRecord>& contacts,
                                 int substep_limit, int substeps_per_frame,
                                 const std::vector<int>& ids,
                                 std::vector<SimpleEvent>& out) {
    std::map<std::pair<int, int>, int> last;
    for (const auto& rec : contacts) {
      if (rec.j < 0 || rec.substep >= substep_limit) continue;
      const std::pair<int, int> key{rec.i, rec.j};
      auto it = last.find(key);
      const bool onset = (it == last.end() || rec.substep > it->second + 1);
      last[key] = rec.substep;
      if (onset) {
        out.push_back({"collision", rec.substep / substeps_per_frame,
                       {ids[rec.i], ids[rec.j]}});
      }
    }
  }

  std::vector<SimpleEvent> events_of(const Trajectory& traj,
                                     const std::vector<ContactRecord>& contacts,
                                     const SceneConfig& scene, int frames) const {
    std::vector<SimpleEvent> out;
    const int substeps = scene.physics.substeps_per_frame;
    for (std::size_t b = 0; b < scene.bodies.size(); ++b) {
      int first_inside = -1, last_inside = -1;
      for (int f = 0; f < frames; ++f) {
        const auto& s = traj.frames[f].bodies[b];
        if (scene.visibility.contains({s.x, s.y})) {
          if (first_inside < 0) first_inside = f;
          last_inside = f;
        }
      }
      if (first_inside < 0) continue;
      out.push_back({"enter", first_inside, {scene.bodies[b].id}});
      if (last_inside + 1 < frames) {
        out.push_back({"exit", last_inside + 1, {scene.bodies[b].id}});
      }
    }
    std::vector<int> ids;
    for (const auto& b : scene.bodies) ids.push_back(b.id);
    collect_collisions(contacts, (frames - 1) * substeps, substeps, ids, out);
    std::sort(out.begin(), out.end(), [](const SimpleEvent& a, const SimpleEvent& b) {
      if (a.frame != b.frame) return a.frame < b.frame;
      return a.participants < b.participants;
    });
    return out;
  }

  std::vector<SimpleEvent> clip_events() const {
    return events_of(g.trajectory, g.contacts, g.scene, clip);
  }

  std::vector<SimpleEvent> unseen_events() const {
    const int frames = clip + horizon;  // samples available to the long rollout
    auto all = events_of(g.trajectory, g.contacts, g.scene, frames);
    std::vector<SimpleEvent> out;
    for (auto& e : all) {
      if (e.frame >= clip) out.push_back(std::move(e));
    }
    return out;
  }

  bool moving_at(int body_id, int frame) const {
    const int index = g.scene.body_index(body_id);
    if (frame < 0 || frame >= clip) return false;
    const int a = frame + 1 < clip ? frame : frame - 1;
    if (a < 0) return false;
    const auto& s0 = g.trajectory.frames[a].bodies[index];
    const auto& s1 = g.trajectory.frames[a + 1].bodies[index];
    if (!g.scene.visibility.contains({s0.x, s0.y}) ||
        !g.scene.visibility.contains({s1.x, s1.y})) {
      return false;
    }
    const double h = g.scene.physics.frame_dt();
    return std::hypot(s1.x - s0.x, s1.y - s0.y) / h > kMoveSpeedThreshold;
  }

  /// Counterfactual collision count: re-simulate with the body removed
  /// (mass_scale <= 0) or kept with a scaled mass.
  int counterfactual_collisions(int body_id, double mass_scale) const {
    SceneConfig scene = g.scene;
    const int index = scene.body_index(body_id);
    if (mass_scale > 0.0) {
      scene.bodies[index].params.mass *= mass_scale;
    } else {
      scene.bodies.erase(scene.bodies.begin() + index);
    }
    const SimulationResult sim = simulate(scene, std::max(clip - 1, 1));
    std::vector<SimpleEvent> events;
    std::vector<int> ids;
    for (const auto& b : scene.bodies) ids.push_back(b.id);
    collect_collisions(sim.contacts, (clip - 1) * scene.physics.substeps_per_frame,
                       scene.physics.substeps_per_frame, ids, events);
    return static_cast<int>(events.size());
  }

  /// Ancestor count of the first collision in the clip's event set, by an
  /// independent transitive closure.
  int first_collision_ancestors() const {
    const auto events = clip_events();
    int target = -1;
    for (std::size_t k = 0; k < events.size(); ++k) {
      if (events[k].kind == "collision") {
        target = static_cast<int>(k);
        break;
      }
    }
    if (target < 0) return -1;
    const std::size_t n = events.size();
    auto shares = [&](std::size_t a, std::size_t b) {
      for (int p : events[a].participants) {
        if (std::find(events[b].participants.begin(), events[b].participants.end(),
                      p) != events[b].participants.end()) {
          return true;
        }
      }
      return false;
    };
    std::vector<bool> anc(n, false);
    std::vector<int> stack{target};
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      for (std::size_t a = 0; a < n; ++a) {
        if (!anc[a] && events[a].frame < events[cur].frame && shares(a, cur)) {
          anc[a] = true;
          stack.push_back(static_cast<int>(a));
        }
      }
    }
    return static_cast<int>(std::count(anc.begin(), anc.end(), true));
  }
};

void criterion_executor_oracle(Check& c) {
  std::set<std::string> ops_exercised;
  int queries = 0, agreements = 0;

  auto record_ops = [&](const json& j) {
    std::function<void(const json&)> scan = [&](const json& node) {
      if (node.is_array()) {
        for (const auto& item : node) scan(item);
      } else if (node.is_object() && node.contains("op")) {
        ops_exercised.insert(node["op"].get<std::string>());
        if (node.contains("args")) scan(node["args"]);
      }
    };
    scan(j);
  };

  auto compare = [&](ExecutionContext& ctx, const std::string& program_text,
                     const json& expected, const std::string& label) {
    const json parsed = json::parse(program_text);
    record_ops(parsed);
    json actual;
    try {
      Value v = execute_program(program_from_json(parsed), ctx);
      actual = v.to_json();
    } catch (const std::exception& e) {
      actual = {{"type", "error"}, {"value", e.what()}};
    }
    ++queries;
    if (actual == expected) {
      ++agreements;
    } else {
      c.require(false,
                label + ": executor " + actual.dump() + " vs oracle " + expected.dump());
    }
  };

  auto answer = [](const char* type, const json& value) {
    return json{{"type", type}, {"value", value}};
  };

  int scene_count = 0;
  for (std::uint64_t seed = 7000; scene_count < 20 && seed < 7080; ++seed) {
    GeneratorSpec spec;
    spec.seed = seed;
    spec.min_bodies = seed % 5 == 0 ? 1 : 2;
    spec.max_bodies = 3;
    spec.frames = 48;
    spec.future_frames = 48;
    spec.require_collision = spec.min_bodies >= 2;
    spec.allow_late_entry = (seed % 4 == 1);
    spec.shape_mix = {ShapeKind::Sphere, ShapeKind::Cylinder, ShapeKind::Cube};
    GeneratedScene g;
    try {
      g = generate_scene(spec);
    } catch (const GenerationExhausted&) {
      continue;
    }
    ++scene_count;

    const OracleView oracle(g, spec.frames, spec.frames);
    ExecutionContext ctx = make_context(g.scene, spec.frames, spec.frames);

    const auto events = oracle.clip_events();
    const int n_bodies = static_cast<int>(g.scene.bodies.size());

    compare(ctx, R"([{"op":"Objects"},{"op":"Count"}])", answer("int", n_bodies),
            "count objects");
    compare(ctx, R"([{"op":"Events"},{"op":"Count"}])",
            answer("int", static_cast<int>(events.size())), "count events");

    int enters = 0, exits = 0, collisions = 0;
    for (const auto& e : events) {
      enters += e.kind == "enter";
      exits += e.kind == "exit";
      collisions += e.kind == "collision";
    }
    compare(ctx,
            R"([{"op":"Events"},{"op":"Filter_in","args":["PIPE",[{"op":"Objects"}]]},{"op":"Count"}])",
            answer("int", enters), "count enters");
    compare(ctx,
            R"([{"op":"Events"},{"op":"Filter_out","args":["PIPE",[{"op":"Objects"}]]},{"op":"Count"}])",
            answer("int", exits), "count exits");
    compare(ctx,
            R"([{"op":"Events"},{"op":"Filter_collision","args":["PIPE",[{"op":"Objects"}]]},{"op":"Count"}])",
            answer("int", collisions), "count collisions");

    compare(ctx,
            R"([{"op":"Events"},{"op":"Filter_after","args":["PIPE",[{"op":"Start"}]]},{"op":"Count"}])",
            answer("int", static_cast<int>(events.size())), "after start");
    compare(ctx,
            R"([{"op":"Events"},{"op":"Filter_before","args":["PIPE",[{"op":"End"}]]},{"op":"Count"}])",
            answer("int", static_cast<int>(events.size())), "before end");

    if (!events.empty()) {
      compare(ctx,
              R"([{"op":"Events"},{"op":"Filter_order","args":["PIPE","First"]},{"op":"Get_frame"}])",
              answer("frame", events.front().frame), "first event frame");
      compare(ctx,
              R"([{"op":"Events"},{"op":"Filter_order","args":["PIPE","Last"]},{"op":"Get_frame"}])",
              answer("frame", events.back().frame), "last event frame");
      compare(ctx,
              R"([{"op":"Events"},{"op":"Filter_order","args":["PIPE","First"]},{"op":"Belong_to","args":["PIPE",[{"op":"Events"}]]}])",
              answer("bool", true), "first belongs to all");
    }

    for (const auto& body : g.scene.bodies) {
      const std::string color = body.params.attributes.at("color");
      compare(ctx,
              R"([{"op":"Objects"},{"op":"Filter_static_concept","args":["PIPE",")" +
                  color + R"("]},{"op":"Unique"},{"op":"Query_shape"}])",
              answer("concept", body.params.attributes.at("shape")),
              "query shape of " + color);
      compare(ctx,
              R"([{"op":"Objects"},{"op":"Filter_static_concept","args":["PIPE",")" +
                  color + R"("]},{"op":"Unique"},{"op":"Query_material"}])",
              answer("concept", body.params.attributes.at("material")),
              "query material of " + color);
      compare(ctx,
              R"([{"op":"Objects"},{"op":"Filter_static_concept","args":["PIPE",")" +
                  color + R"("]},{"op":"Unique"},{"op":"Query_color"}])",
              answer("concept", color), "query color of " + color);
    }

    {
      std::set<std::string> used;
      for (const auto& b : g.scene.bodies) used.insert(b.params.attributes.at("color"));
      std::string absent;
      for (const char* cand : {"gray", "red", "blue", "green", "brown", "cyan"}) {
        if (!used.count(cand)) {
          absent = cand;
          break;
        }
      }
      compare(ctx,
              R"([{"op":"Objects"},{"op":"Filter_static_concept","args":["PIPE",")" +
                  absent + R"("]},{"op":"Exist"},{"op":"Negate"}])",
              answer("bool", true), "absent color " + absent);
    }

    {
      const int mid = spec.frames / 2;
      int moving = 0;
      for (const auto& b : g.scene.bodies) moving += oracle.moving_at(b.id, mid);
      compare(ctx,
              R"([{"op":"Objects"},{"op":"Filter_dynamic_concept","args":["PIPE","moving",)" +
                  std::to_string(mid) + R"(]},{"op":"Count"}])",
              answer("int", moving), "moving at mid");
      compare(ctx,
              R"([{"op":"Objects"},{"op":"Filter_dynamic_concept","args":["PIPE","stationary",)" +
                  std::to_string(mid) + R"(]},{"op":"Count"}])",
              answer("int", n_bodies - moving), "stationary at mid");
    }

    if (collisions > 0) {
      const auto first_event =
          *std::find_if(events.begin(), events.end(),
                        [](const OracleView::SimpleEvent& e) { return e.kind == "collision"; });
      int before = 0, after = 0;
      for (const auto& e : events) {
        before += e.frame < first_event.frame;
        after += e.frame > first_event.frame;
      }
      const std::string first_col =
          R"([{"op":"Events"},{"op":"Filter_collision","args":["PIPE",[{"op":"Objects"}]]},{"op":"Filter_order","args":["PIPE","First"]}])";
      compare(ctx,
              R"([{"op":"Events"},{"op":"Filter_before","args":["PIPE",)" + first_col +
                  R"(]},{"op":"Count"}])",
              answer("int", before), "events before first collision");
      compare(ctx,
              R"([{"op":"Events"},{"op":"Filter_after","args":["PIPE",)" + first_col +
                  R"(]},{"op":"Count"}])",
              answer("int", after), "events after first collision");

      const SceneBody* a = g.scene.find_body(first_event.participants[0]);
      const SceneBody* b = g.scene.find_body(first_event.participants[1]);
      compare(ctx,
              first_col.substr(0, first_col.size() - 1) +
                  R"(,{"op":"Get_col_partner","args":["PIPE",[{"op":"Objects"},{"op":"Filter_static_concept","args":["PIPE",")" +
                  a->params.attributes.at("color") +
                  R"("]},{"op":"Unique"}]]},{"op":"Query_color"}])",
              answer("concept", b->params.attributes.at("color")), "collision partner");

      compare(ctx,
              first_col.substr(0, first_col.size() - 1) +
                  R"(,{"op":"Filter_ancestor","args":["PIPE",[{"op":"Events"}]]},{"op":"Count"}])",
              answer("int", oracle.first_collision_ancestors()), "ancestor count");
    }

    {
      const auto unseen = oracle.unseen_events();
      compare(ctx, R"([{"op":"UnseenEvents"},{"op":"Count"}])",
              answer("int", static_cast<int>(unseen.size())), "unseen events");
      compare(ctx, R"([{"op":"Objects"},{"op":"Predictive_simulation"},{"op":"Count"}])",
              answer("int", static_cast<int>(unseen.size())), "predictive simulation");
    }

    if (n_bodies >= 2) {
      for (const auto& body : g.scene.bodies) {
        const std::string color = body.params.attributes.at("color");
        const std::string select =
            R"([{"op":"Objects"},{"op":"Filter_static_concept","args":["PIPE",")" + color +
            R"("]},{"op":"Unique"},)";
        compare(ctx,
                select +
                    R"({"op":"Counterfactual_simulation"},{"op":"Filter_collision","args":["PIPE",[{"op":"Objects"}]]},{"op":"Count"}])",
                answer("int", oracle.counterfactual_collisions(body.id, 0.0)),
                "counterfactual removal of " + color);

        ExecutionContext heavier_ctx = make_context(g.scene, spec.frames, spec.frames);
        compare(heavier_ctx,
                select +
                    R"({"op":"Apply_heavier"},{"op":"Counterfactual_simulation"},{"op":"Filter_collision","args":["PIPE",[{"op":"Objects"}]]},{"op":"Count"}])",
                answer("int", oracle.counterfactual_collisions(body.id, 5.0)),
                "counterfactual heavier " + color);

        ExecutionContext lighter_ctx = make_context(g.scene, spec.frames, spec.frames);
        compare(lighter_ctx,
                select +
                    R"({"op":"Apply_lighter"},{"op":"Counterfactual_simulation"},{"op":"Filter_collision","args":["PIPE",[{"op":"Objects"}]]},{"op":"Count"}])",
                answer("int", oracle.counterfactual_collisions(body.id, 0.2)),
                "counterfactual lighter " + color);
      }
    }
  }

  const char* required_ops[] = {
      "Objects", "Events", "UnseenEvents", "Start", "End", "Query_color",
      "Query_material", "Query_shape", "Count", "Exist", "Belong_to", "Negate",
      "Counterfactual_simulation", "Predictive_simulation", "Apply_heavier",
      "Apply_lighter", "Filter_static_concept", "Filter_dynamic_concept", "Unique",
      "Filter_in", "Filter_out", "Filter_collision", "Get_col_partner", "Filter_before",
      "Filter_after", "Filter_order", "Filter_ancestor", "Get_frame"};
  for (const char* op : required_ops) {
    c.require(ops_exercised.count(op) > 0, std::string("operation never exercised: ") + op);
  }
  c.note(std::to_string(agreements) + "/" + std::to_string(queries) +
         " query agreements over 20 scenes");
  c.require(scene_count == 20, "only " + std::to_string(scene_count) + " scenes");
  c.require(queries >= 200, "query suite too small");
  c.require(agreements == queries, "executor disagreed with the enumerator");
}

// ---------------------------------------------------------------------------
// Criterion 12: counterfactual invariances
// ---------------------------------------------------------------------------

void criterion_counterfactual_invariances(Check& c) {
  SceneConfig scene = test::head_on_pair(0.9);
  scene.visibility = Region{{-20, -20}, {20, 20}};
  SceneBody far;
  far.id = 2;
  far.params = {2.0, 0.7, 1.0, ShapeKind::Sphere, {{"color", "green"}}};
  far.state = {{0.0, 15.0}, {0.3, 0.1}, 0.0, 0.0};
  scene.bodies.push_back(far);

  const auto factual = simulate(scene, 64);
  const auto [events, trajectory] = counterfactual_simulation(scene, 2, 64);
  bool identical = true;
  for (int f = 0; f < trajectory.frame_count(); ++f) {
    for (std::size_t b = 0; b < trajectory.frames[f].bodies.size(); ++b) {
      const auto& cf = trajectory.frames[f].bodies[b];
      const auto& fa = factual.trajectory.frames[f].bodies[b];
      if (cf.x != fa.x || cf.y != fa.y || cf.alpha != fa.alpha) identical = false;
    }
  }
  c.require(identical, "removal of a non-interacting body changed other trajectories");

  SceneConfig m = scene;
  m.bodies[0].params.mass = 2.0;
  const SceneConfig heavier = apply_heavier(m, 0);
  c.require(heavier.bodies[0].params.mass == 2.0 * 5.0, "heavier is exactly x5");
  const SceneConfig lighter = apply_lighter(m, 0);
  c.require(lighter.bodies[0].params.mass == 2.0 * 0.2, "lighter is exactly x0.2");
  const SceneConfig round = apply_lighter(heavier, 0);
  c.require(std::abs(round.bodies[0].params.mass - 2.0) < 2.0 * 1e-12,
            "heavier then lighter returns the original mass");
}

// ---------------------------------------------------------------------------
// Criterion 13: projection round-trip and calibration
// ---------------------------------------------------------------------------

void criterion_projection(Check& c) {
  CameraMatrix cam;
  cam.ground = 1.0;
  cam.k = {{{800.0, -40.0, 0.0, 320.0},
            {30.0, 600.0, 0.0, 240.0},
            {0.1, 0.05, 0.0, 1.0},
            {0.0, 0.0, 1.0, 0.0}}};

  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> coord(-4.0, 4.0);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Vec2d bev{coord(rng), coord(rng)};
    const Vec2d back = image_to_bev(project_to_image(bev, cam), cam);
    worst = std::max({worst, std::abs(back.x - bev.x), std::abs(back.y - bev.y)});
  }
  c.require(worst < 1e-9, "round-trip error " + std::to_string(worst));
  c.note("worst of 1000 round-trips: " + std::to_string(worst));

  std::vector<std::pair<Vec2d, Vec2d>> pairs;
  for (double x : {-3.0, -1.0, 0.5, 2.0, 3.5}) {
    for (double y : {-2.0, 0.0, 1.5, 3.0}) {
      pairs.push_back({project_to_image({x, y}, cam), {x, y}});
    }
  }
  const CalibrationResult calib = calibrate_camera(pairs);
  double worst_calib = 0.0;
  for (const auto& [image, bev] : pairs) {
    const Vec2d back = image_to_bev(image, calib.camera);
    worst_calib =
        std::max({worst_calib, std::abs(back.x - bev.x), std::abs(back.y - bev.y)});
  }
  c.require(worst_calib < 1e-6, "calibration error " + std::to_string(worst_calib));
}

// ---------------------------------------------------------------------------
// Criterion 14: CLI determinism
// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, std::string* out = nullptr) {
  const std::string cmd = std::string(BEVSIM_CLI_PATH) + " " + args + " 2>/dev/null";
  std::array<char, 4096> buffer;
  std::string captured;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return -1;
  while (fgets(buffer.data(), buffer.size(), pipe)) captured += buffer.data();
  if (out) *out = captured;
  const int status = pclose(pipe);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void criterion_determinism(Check& c) {
  const fs::path root = fs::temp_directory_path() / "bevsim_acceptance_det";
  fs::remove_all(root);
  fs::create_directories(root);

  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / run;
    c.require(run_cli("gen --seed 77 --count 2 --frames 48 --future 16 --noise-sigma "
                      "0.01 --out " +
                      (dir / "g").string()) == 0,
              "gen failed");
    c.require(run_cli("simulate --scene " + (dir / "g/scene_000.truth.json").string() +
                      " --frames 32 --out " + (dir / "sim.json").string()) == 0,
              "simulate failed");
    c.require(run_cli("identify --template " +
                      (dir / "g/scene_000.template.json").string() + " --obs " +
                      (dir / "g/scene_000.obs.json").string() +
                      " --stages initial,collision --out " + (dir / "fit.json").string()) ==
                  0,
              "identify failed");
    std::ofstream prog(dir / "prog.json");
    prog << R"([{"op":"Events"},{"op":"Count"}])";
    prog.close();
    c.require(run_cli("query --report " + (dir / "fit.json").string() + " --program " +
                      (dir / "prog.json").string() + " --frames 48 --out " +
                      (dir / "answer.json").string()) == 0,
              "query failed");
  }

  for (const char* rel :
       {"g/scene_000.template.json", "g/scene_000.obs.json", "g/scene_000.truth.json",
        "g/scene_001.obs.json", "sim.json", "sim.json.events.json", "fit.json",
        "answer.json"}) {
    const std::string a = slurp(root / "a" / rel);
    const std::string b = slurp(root / "b" / rel);
    c.require(!a.empty() && a == b, std::string("output differs or is empty: ") + rel);
  }
}

// ---------------------------------------------------------------------------

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<void(Check&)> run;
};

}  // namespace

int main() {
  Check energy;  // filled by criterion 1's sweep, reported as criterion 2
  std::vector<Criterion> criteria;

  criteria.push_back({1, "momentum conservation over 1e4 impulse resolutions", 5.0,
                      [&](Check& c) { criterion_momentum_energy(c, energy); }});
  criteria.push_back({2, "kinetic energy law (no gain; exact elastic case)", 5.0,
                      [&](Check& c) { c = energy; }});
  criteria.push_back({3, "elastic collision oracle", 5.0, criterion_elastic_oracle});
  criteria.push_back(
      {4, "RK2 second-order convergence", 30.0, criterion_integrator_order});
  criteria.push_back(
      {5, "gradient correctness vs finite differences", 120.0, criterion_gradients});
  criteria.push_back({6, "noiseless parameter recovery (K=10 globals, 20 scenes)",
                      600.0, criterion_recovery});
  criteria.push_back({7, "single-scene (K=1) recovery at relaxed tolerance", 120.0,
                      criterion_single_scene});
  criteria.push_back({8, "curriculum beats direct fitting on >= 70% of scenes", 300.0,
                      criterion_curriculum});
  criteria.push_back({9, "last-20-frame refit improves prediction on >= 70%", 600.0,
                      criterion_refit_trend});
  criteria.push_back(
      {10, "billiards S2 <= 4 x S1 on >= 70% of seeds", 600.0, criterion_billiards});
  criteria.push_back({11, "executor agrees with the brute-force enumerator", 60.0,
                      criterion_executor_oracle});
  criteria.push_back({12, "counterfactual invariances", 30.0,
                      criterion_counterfactual_invariances});
  criteria.push_back(
      {13, "projection round-trip and calibration", 30.0, criterion_projection});
  criteria.push_back({14, "deterministic CLI reruns are byte-identical", 120.0,
                      criterion_determinism});

  int failures = 0;
  for (auto& criterion : criteria) {
    Check check;
    const double t0 = now_seconds();
    try {
      criterion.run(check);
    } catch (const std::exception& e) {
      check.require(false, std::string("exception: ") + e.what());
    }
    const double elapsed = now_seconds() - t0;
    if (elapsed > criterion.budget_seconds) {
      check.require(false, "runtime " + std::to_string(elapsed) + "s exceeds budget " +
                               std::to_string(criterion.budget_seconds) + "s");
    }
    std::printf("[%s] %2d. %s (%.1fs)\n", check.ok ? "PASS" : "FAIL", criterion.id,
                criterion.name.c_str(), elapsed);
    for (const auto& note : check.notes) {
      std::printf("       %s\n", note.c_str());
    }
    std::fflush(stdout);
    if (!check.ok) ++failures;
  }

  if (failures > 0) {
    std::printf("%d criteria failed\n", failures);
    return 1;
  }
  std::printf("all %zu criteria passed\n", criteria.size());
  return 0;
}
