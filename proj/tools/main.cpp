#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bevsim/dynamics.hpp"
#include "bevsim/errors.hpp"
#include "bevsim/executor.hpp"
#include "bevsim/gradients.hpp"
#include "bevsim/identify.hpp"
#include "bevsim/json_io.hpp"
#include "bevsim/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bevsim;

namespace {

constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

/// Every run drops a manifest beside its outputs. Timing lives here, not
/// in the primary outputs, so repeated runs stay byte-identical.
struct Manifest {
  std::string command;
  json config = json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void write(const fs::path& path) const {
    json j;
    j["command"] = command;
    j["config"] = config;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["version"] = kVersion;
    j["wall_clock_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_json_file(path.string(), j);
  }
};

/// Scene files come in three flavors: bare scenes, truth sidecars, and
/// fit reports. All of them carry a usable scene.
SceneConfig load_scene(const std::string& path) {
  const json j = read_json_file(path);
  if (j.contains("bodies")) return scene_from_json(j);
  if (j.contains("scene")) return scene_from_json(j.at("scene"));
  if (j.contains("fitted")) return scene_from_json(j.at("fitted"));
  throw DataError(path + ": not a scene, truth, or report file");
}

json truth_to_json(const GeneratedScene& g) {
  json j;
  j["scene"] = scene_to_json(g.scene);
  j["trajectory"] = trajectory_to_json(g.trajectory);
  j["events"] = events_to_json(g.events);
  j["observed_frames"] = g.observed_frames;
  return j;
}

/// Identification starts from a template carrying only what perception
/// would provide: shapes, attributes, geometry, and the global physics.
SceneConfig template_of(const SceneConfig& truth) {
  SceneConfig tmpl = truth;
  for (auto& b : tmpl.bodies) {
    b.state = BodyState{};
    b.params.mass = 1.0;
    b.params.restitution = 0.8;
  }
  return tmpl;
}

FitSchedule schedule_from_file(const std::string& path) {
  FitSchedule s;
  if (path.empty()) return s;
  const json j = read_json_file(path);
  if (j.contains("curriculum")) {
    s.curriculum.clear();
    for (const auto& w : j["curriculum"]) {
      s.curriculum.push_back({w[0].get<int>(), w[1].get<int>()});
    }
  }
  if (j.contains("thresholds")) {
    s.curriculum_thresholds = j["thresholds"].get<std::vector<double>>();
  }
  if (s.curriculum.size() != s.curriculum_thresholds.size()) {
    throw DataError("schedule: curriculum and thresholds must have equal length");
  }
  s.initial_state_threshold = j.value("initial_threshold", s.initial_state_threshold);
  s.max_steps = j.value("max_steps", s.max_steps);
  s.global_max_steps = j.value("global_max_steps", s.global_max_steps);
  s.prediction_refit_frames = j.value("refit_frames", s.prediction_refit_frames);
  return s;
}

json report_to_json(const FitReport& report) {
  json j;
  j["v"] = 1;
  j["fitted"] = scene_to_json(report.fitted);
  j["refit"] = scene_to_json(report.refit_scene);
  json marks = json::array();
  for (const auto& m : report.first_collisions) {
    marks.push_back(m ? json(*m) : json(nullptr));
  }
  j["first_collisions"] = marks;
  j["flags"] = report.flags;
  json traces = json::object();
  for (const auto& [k, v] : report.stage_traces) traces[k] = v;
  j["stage_losses"] = traces;
  return j;
}

FitReport report_from_json(const json& j, FitReport& out) {
  out.fitted = scene_from_json(j.at("fitted"));
  out.refit_scene = scene_from_json(j.at("refit"));
  return out;
}

StageSelection parse_stages(const std::string& spec) {
  if (spec.empty() || spec == "all") return {};
  StageSelection s;
  s.global = s.initial = s.collision = s.refit = false;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "global") s.global = true;
    else if (tok == "initial") s.initial = true;
    else if (tok == "collision") s.collision = true;
    else if (tok == "refit") s.refit = true;
    else throw DataError("unknown stage: " + tok);
  }
  return s;
}

std::string svg_color(const std::string& name) {
  if (name == "gray") return "#8e8e8e";
  if (name == "red") return "#d63031";
  if (name == "blue") return "#0984e3";
  if (name == "green") return "#00b894";
  if (name == "brown") return "#a0522d";
  if (name == "cyan") return "#00cec9";
  if (name == "purple") return "#6c5ce7";
  if (name == "yellow") return "#fdcb6e";
  if (name == "white") return "#f5f3ef";
  return "#4682b4";
}

/// Stroboscopic overlay: body footprints at every k-th frame with opacity
/// rising toward the final frame.
void write_strobe_svg(const std::string& path, const SceneConfig& scene,
                      const Trajectory& traj, int every) {
  const double pad = 0.5;
  const double x0 = scene.visibility.min.x - pad;
  const double y0 = scene.visibility.min.y - pad;
  const double w = scene.visibility.max.x - scene.visibility.min.x + 2 * pad;
  const double h = scene.visibility.max.y - scene.visibility.min.y + 2 * pad;
  const double scale = 800.0 / std::max(w, h);

  auto sx = [&](double x) { return (x - x0) * scale; };
  auto sy = [&](double y) { return (h - (y - y0)) * scale; };  // y up

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w * scale
      << "\" height=\"" << h * scale << "\" viewBox=\"0 0 " << w * scale << " "
      << h * scale << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"#fbfaf8\"/>\n";
  svg << "<rect x=\"" << sx(scene.visibility.min.x) << "\" y=\""
      << sy(scene.visibility.max.y) << "\" width=\""
      << (scene.visibility.max.x - scene.visibility.min.x) * scale << "\" height=\""
      << (scene.visibility.max.y - scene.visibility.min.y) * scale
      << "\" fill=\"none\" stroke=\"#b2bec3\" stroke-dasharray=\"6 4\"/>\n";
  for (const auto& wall : scene.walls) {
    svg << "<line x1=\"" << sx(wall.a.x) << "\" y1=\"" << sy(wall.a.y) << "\" x2=\""
        << sx(wall.b.x) << "\" y2=\"" << sy(wall.b.y)
        << "\" stroke=\"#2d3436\" stroke-width=\"3\"/>\n";
  }

  const int frames = traj.frame_count();
  for (int f = 0; f < frames; f += every) {
    const double opacity = 0.12 + 0.85 * (frames > 1 ? double(f) / (frames - 1) : 1.0);
    for (std::size_t b = 0; b < traj.frames[f].bodies.size(); ++b) {
      const auto& s = traj.frames[f].bodies[b];
      const SceneBody* body = scene.find_body(s.id);
      if (!body) continue;
      const double r = body->params.radius * scale;
      std::string color = "#4682b4";
      auto it = body->params.attributes.find("color");
      if (it != body->params.attributes.end()) color = svg_color(it->second);
      if (has_circle_footprint(body->params.shape)) {
        svg << "<circle cx=\"" << sx(s.x) << "\" cy=\"" << sy(s.y) << "\" r=\"" << r
            << "\" fill=\"" << color << "\" fill-opacity=\"" << opacity << "\"/>\n";
      } else {
        svg << "<rect x=\"" << sx(s.x) - r << "\" y=\"" << sy(s.y) - r << "\" width=\""
            << 2 * r << "\" height=\"" << 2 * r << "\" fill=\"" << color
            << "\" fill-opacity=\"" << opacity << "\" transform=\"rotate("
            << -s.alpha * 180.0 / M_PI << " " << sx(s.x) << " " << sy(s.y) << ")\"/>\n";
      }
    }
  }
  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << svg.str();
}


// ---------------------------------------------------------------------------
// Subcommand implementations
// ---------------------------------------------------------------------------

struct GenArgs {
  std::uint64_t seed = 0;
  int count = 1;
  std::string out;
  int frames = 128;
  int future = 128;
  int min_bodies = 2, max_bodies = 3;
  double noise_sigma = 0.0;
  std::string shapes = "sphere,cylinder";
  bool billiards = false;
  bool collision_per_body = false;
  bool late_entry = false;
  int min_precollision = 10;
};

int run_gen(const GenArgs& args) {
  Manifest manifest;
  manifest.command = "gen";
  manifest.config = {{"seed", args.seed},          {"count", args.count},
                     {"frames", args.frames},      {"future", args.future},
                     {"noise_sigma", args.noise_sigma}, {"billiards", args.billiards},
                     {"shapes", args.shapes}};

  fs::create_directories(args.out);
  for (int k = 0; k < args.count; ++k) {
    GeneratorSpec spec;
    spec.seed = args.seed + static_cast<std::uint64_t>(k);
    spec.frames = args.frames;
    spec.future_frames = args.future;
    spec.min_bodies = args.min_bodies;
    spec.max_bodies = args.max_bodies;
    spec.noise_sigma = args.noise_sigma;
    spec.require_collision_per_body = args.collision_per_body;
    spec.allow_late_entry = args.late_entry;
    spec.min_precollision_frames = args.min_precollision;
    spec.shape_mix.clear();
    std::stringstream ss(args.shapes);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const auto shape = shape_from_name(tok);
      if (!shape) throw DataError("unknown shape in --shapes: " + tok);
      spec.shape_mix.push_back(*shape);
    }

    GeneratedScene g;
    if (args.billiards) {
      g.scene = make_billiards(spec.seed);
      g.observed_frames = spec.frames;
      SimulationResult sim = simulate(g.scene, spec.frames + spec.future_frames);
      g.trajectory = std::move(sim.trajectory);
      g.events = std::move(sim.events);
      g.contacts = std::move(sim.contacts);
    } else {
      g = generate_scene(spec);
    }
    const Trajectory obs = observe(g, spec);

    std::ostringstream stem;
    stem << "scene_" << std::setw(3) << std::setfill('0') << k;
    const fs::path base = fs::path(args.out) / stem.str();
    write_json_file(base.string() + ".template.json", scene_to_json(template_of(g.scene)));
    write_json_file(base.string() + ".obs.json", trajectory_to_json(obs));
    write_json_file(base.string() + ".truth.json", truth_to_json(g));
    manifest.outputs.push_back(base.string() + ".template.json");
    manifest.outputs.push_back(base.string() + ".obs.json");
    manifest.outputs.push_back(base.string() + ".truth.json");
  }
  manifest.write(fs::path(args.out) / "gen.manifest.json");
  return 0;
}

int run_simulate(const std::string& scene_path, int frames, const std::string& out,
                 const std::string& events_out) {
  Manifest manifest;
  manifest.command = "simulate";
  manifest.config = {{"frames", frames}};
  manifest.inputs = {scene_path};

  const SceneConfig scene = load_scene(scene_path);
  const SimulationResult result = simulate(scene, frames);
  write_json_file(out, trajectory_to_json(result.trajectory));
  manifest.outputs.push_back(out);
  const std::string ev = events_out.empty() ? out + ".events.json" : events_out;
  write_json_file(ev, events_to_json(result.events));
  manifest.outputs.push_back(ev);
  manifest.write(out + ".manifest.json");
  return 0;
}

int run_identify(const std::string& template_path, const std::vector<std::string>& obs_paths,
                 const std::string& out, const std::string& stages_spec,
                 const std::string& schedule_path, int max_steps_override, int jobs) {
  Manifest manifest;
  manifest.command = "identify";
  manifest.config = {{"stages", stages_spec.empty() ? "all" : stages_spec},
                     {"jobs", jobs}};
  manifest.inputs = obs_paths;
  manifest.inputs.push_back(template_path);

  FitSchedule schedule = schedule_from_file(schedule_path);
  if (max_steps_override > 0) schedule.max_steps = max_steps_override;
  const StageSelection stages = parse_stages(stages_spec);

  const SceneConfig tmpl = scene_from_json(read_json_file(template_path));
  std::vector<Trajectory> observations;
  for (const auto& p : obs_paths) {
    observations.push_back(trajectory_from_json(read_json_file(p)));
  }
  if (observations.empty()) throw DataError("identify needs at least one --obs file");

  std::optional<GlobalFitResult> globals;
  if (stages.global) {
    std::vector<SceneConfig> templates(observations.size(), tmpl);
    globals = fit_global(templates, observations, schedule);
  }

  auto fit_one = [&](std::size_t k) {
    return identify_scene(tmpl, observations[k], globals ? &*globals : nullptr,
                          schedule, stages);
  };

  std::vector<FitReport> reports(observations.size());
  if (jobs > 1 && observations.size() > 1) {
    std::vector<std::future<FitReport>> futures;
    for (std::size_t k = 0; k < observations.size(); ++k) {
      futures.push_back(std::async(std::launch::async, fit_one, k));
    }
    for (std::size_t k = 0; k < observations.size(); ++k) reports[k] = futures[k].get();
  } else {
    for (std::size_t k = 0; k < observations.size(); ++k) reports[k] = fit_one(k);
  }

  if (observations.size() == 1) {
    write_json_file(out, report_to_json(reports[0]));
    manifest.outputs.push_back(out);
    manifest.write(out + ".manifest.json");
  } else {
    fs::create_directories(out);
    if (globals) {
      json gj;
      gj["lambda1"] = globals->lambda1;
      gj["lambda2"] = globals->lambda2;
      gj["lambda3"] = globals->lambda3;
      for (const auto& [shape, r] : globals->radius) {
        gj["radius"][shape_name(shape)] = r;
      }
      for (const auto& [k, v] : globals->flags) gj["flags"][k] = fit_flag_name(v);
      write_json_file((fs::path(out) / "global.json").string(), gj);
      manifest.outputs.push_back((fs::path(out) / "global.json").string());
    }
    for (std::size_t k = 0; k < reports.size(); ++k) {
      std::ostringstream name;
      name << "report_" << std::setw(3) << std::setfill('0') << k << ".json";
      const std::string path = (fs::path(out) / name.str()).string();
      write_json_file(path, report_to_json(reports[k]));
      manifest.outputs.push_back(path);
    }
    manifest.write(fs::path(out) / "identify.manifest.json");
  }
  return 0;
}

int run_predict(const std::string& report_path, const std::string& obs_path,
                const std::string& truth_path, const std::string& out, int horizon) {
  Manifest manifest;
  manifest.command = "predict";
  manifest.inputs = {report_path, obs_path};

  FitReport report;
  report_from_json(read_json_file(report_path), report);
  const Trajectory obs = trajectory_from_json(read_json_file(obs_path));
  const int frames = obs.frame_count();
  if (horizon <= 0) horizon = frames;
  manifest.config = {{"horizon", horizon}};

  // S1: rollout of the fitted scene over the observed window.
  const SimulationResult s1 = simulate(report.fitted, std::max(frames - 1, 1));

  // S2: continue from the refit state at the final observed frame.
  const SceneConfig at_end = advance_to_frame(report.refit_scene, frames - 1);
  const SimulationResult s2 = simulate(at_end, horizon);
  Trajectory s2_abs = s2.trajectory;  // re-index to absolute frames
  for (auto& f : s2_abs.frames) f.frame += frames - 1;

  json j;
  j["v"] = 1;
  j["horizon"] = horizon;
  j["s1_trajectory"] = trajectory_to_json(s1.trajectory);
  j["s2_trajectory"] = trajectory_to_json(s2_abs);
  if (!truth_path.empty()) {
    manifest.inputs.push_back(truth_path);
    const json tj = read_json_file(truth_path);
    const Trajectory truth = trajectory_from_json(tj.at("trajectory"));
    j["s1_mse"] = rollout_mse(s1.trajectory, truth, 0, frames);
    j["s2_mse"] = rollout_mse(s2_abs, truth, frames, frames + horizon);
  }
  write_json_file(out, j);
  manifest.outputs.push_back(out);
  manifest.write(out + ".manifest.json");
  return 0;
}

int run_query(const std::string& scene_path, const std::string& report_path,
              const std::string& program_path, int frames, int horizon,
              const std::string& out) {
  SceneConfig fitted;
  SceneConfig prediction;
  if (!report_path.empty()) {
    FitReport report;
    report_from_json(read_json_file(report_path), report);
    fitted = report.fitted;
    prediction = report.refit_scene;
  } else if (!scene_path.empty()) {
    fitted = load_scene(scene_path);
    prediction = fitted;
  } else {
    throw DataError("query needs --scene or --report");
  }

  const Program program = program_from_json(read_json_file(program_path));
  ExecutionContext ctx = make_context(fitted, prediction, frames, horizon);
  const Value answer = execute_program(program, ctx);
  const std::string text = answer.to_json().dump();
  std::cout << text << "\n";
  if (!out.empty()) {
    Manifest manifest;
    manifest.command = "query";
    manifest.inputs = {program_path, report_path.empty() ? scene_path : report_path};
    manifest.config = {{"frames", frames}, {"horizon", horizon}};
    std::ofstream f(out);
    if (!f) throw DataError("cannot write " + out);
    f << text << "\n";
    manifest.outputs = {out};
    manifest.write(out + ".manifest.json");
  }
  return 0;
}

int run_gradcheck(const std::string& scene_path, const std::string& obs_path, int frames,
                  double h) {
  const SceneConfig scene = load_scene(scene_path);
  const Trajectory obs = trajectory_from_json(read_json_file(obs_path));
  if (frames <= 0) frames = obs.frame_count();

  ParamVector theta;
  for (const auto& b : scene.bodies) {
    theta.push({ParamField::PosX, 0, b.id}, b.state.pos.x, Reparam::Identity);
    theta.push({ParamField::PosY, 0, b.id}, b.state.pos.y, Reparam::Identity);
    theta.push({ParamField::VelX, 0, b.id}, b.state.vel.x, Reparam::Identity);
    theta.push({ParamField::VelY, 0, b.id}, b.state.vel.y, Reparam::Identity);
    theta.push({ParamField::Mass, 0, b.id}, b.params.mass, Reparam::ExpPositive);
    theta.push({ParamField::Restitution, 0, b.id}, b.params.restitution,
               Reparam::BoundedSigmoid);
  }
  theta.push({ParamField::Lambda1}, scene.physics.lambda1, Reparam::ExpPositive);
  theta.push({ParamField::Lambda2}, scene.physics.lambda2, Reparam::ExpPositive);
  theta.push({ParamField::Lambda3}, scene.physics.lambda3, Reparam::ExpPositive);

  std::vector<FitScene> scenes(1);
  scenes[0].scene = scene;
  scenes[0].observed = obs;
  scenes[0].range = {0, frames};

  const GradResult g = grad_loss(scenes, theta);
  const std::vector<double> fd = finite_diff_grad(scenes, theta, h);

  std::cout << "param\tanalytic\tfinite_diff\trel_error\n";
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double denom = std::max({std::abs(g.grad[k]), std::abs(fd[k]), 1e-30});
    std::cout << theta.params[k].id.label() << "\t" << g.grad[k] << "\t" << fd[k] << "\t"
              << std::abs(g.grad[k] - fd[k]) / denom << "\n";
  }
  return 0;
}

int run_plot(const std::string& scene_path, const std::string& traj_path,
             const std::string& out, int every) {
  const SceneConfig scene = load_scene(scene_path);
  const Trajectory traj = trajectory_from_json(read_json_file(traj_path));
  if (every <= 0) every = std::max(1, traj.frame_count() / 24);
  write_strobe_svg(out, scene, traj, every);
  Manifest manifest;
  manifest.command = "plot";
  manifest.inputs = {scene_path, traj_path};
  manifest.config = {{"every", every}};
  manifest.outputs = {out};
  manifest.write(out + ".manifest.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bevsim: differentiable 2D rigid-body simulation, parameter "
               "identification, and symbolic scene queries"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* cmd_gen = app.add_subcommand("gen", "Generate synthetic scenes with truth sidecars");
  cmd_gen->add_option("--seed", gen.seed, "Base seed");
  cmd_gen->add_option("--count", gen.count, "Number of scenes");
  cmd_gen->add_option("--out", gen.out, "Output directory")->required();
  cmd_gen->add_option("--frames", gen.frames, "Observed frames");
  cmd_gen->add_option("--future", gen.future, "Extra ground-truth frames");
  cmd_gen->add_option("--bodies-min", gen.min_bodies, "Minimum body count");
  cmd_gen->add_option("--bodies-max", gen.max_bodies, "Maximum body count");
  cmd_gen->add_option("--noise-sigma", gen.noise_sigma, "Observation noise sigma [m]");
  cmd_gen->add_option("--shapes", gen.shapes, "Comma-separated shape mix");
  cmd_gen->add_flag("--billiards", gen.billiards, "Billiards table scenes");
  cmd_gen->add_flag("--collision-per-body", gen.collision_per_body,
                    "Require every body to collide");
  cmd_gen->add_flag("--late-entry", gen.late_entry, "Spawn one body outside visibility");
  cmd_gen->add_option("--min-precollision", gen.min_precollision,
                      "Minimum frames before any first collision");

  std::string sim_scene, sim_out, sim_events;
  int sim_frames = 128;
  auto* cmd_sim = app.add_subcommand("simulate", "Roll a scene forward");
  cmd_sim->add_option("--scene", sim_scene, "Scene JSON")->required();
  cmd_sim->add_option("--frames", sim_frames, "Frames to simulate");
  cmd_sim->add_option("--out", sim_out, "Trajectory output")->required();
  cmd_sim->add_option("--events-out", sim_events, "Event log output");

  std::string id_template, id_out, id_stages, id_schedule;
  std::vector<std::string> id_obs;
  int id_jobs = 1, id_max_steps = 0;
  auto* cmd_id = app.add_subcommand("identify", "Recover physical parameters");
  cmd_id->add_option("--template", id_template, "Scene template JSON")->required();
  cmd_id->add_option("--obs", id_obs, "Observation JSON file(s)")->required();
  cmd_id->add_option("--out", id_out, "Report file (or directory for multiple obs)")
      ->required();
  cmd_id->add_option("--stages", id_stages,
                     "Comma-separated subset of global,initial,collision,refit");
  cmd_id->add_option("--schedule", id_schedule, "Fit schedule JSON");
  cmd_id->add_option("--max-steps", id_max_steps, "Override optimizer step cap");
  cmd_id->add_option("--jobs", id_jobs, "Concurrent scene fits");

  std::string pred_report, pred_obs, pred_truth, pred_out;
  int pred_horizon = 0;
  auto* cmd_pred = app.add_subcommand("predict", "S1/S2 rollouts from a fit report");
  cmd_pred->add_option("--report", pred_report, "Fit report JSON")->required();
  cmd_pred->add_option("--obs", pred_obs, "Observation JSON")->required();
  cmd_pred->add_option("--truth", pred_truth, "Truth sidecar for error reporting");
  cmd_pred->add_option("--out", pred_out, "Prediction output")->required();
  cmd_pred->add_option("--horizon", pred_horizon, "Future frames (default: clip length)");

  std::string q_scene, q_report, q_program, q_out;
  int q_frames = 128, q_horizon = 0;
  auto* cmd_query = app.add_subcommand("query", "Execute a symbolic program");
  cmd_query->add_option("--scene", q_scene, "Fitted scene JSON");
  cmd_query->add_option("--report", q_report, "Fit report JSON (used over --scene)");
  cmd_query->add_option("--program", q_program, "Program JSON")->required();
  cmd_query->add_option("--frames", q_frames, "Observed clip length");
  cmd_query->add_option("--horizon", q_horizon, "Predictive horizon");
  cmd_query->add_option("--out", q_out, "Also write the answer to a file");

  std::string gc_scene, gc_obs;
  int gc_frames = 0;
  double gc_h = 1e-6;
  auto* cmd_gc = app.add_subcommand("gradcheck",
                                    "Analytic vs finite-difference gradient report");
  cmd_gc->add_option("--scene", gc_scene, "Scene JSON")->required();
  cmd_gc->add_option("--obs", gc_obs, "Observation JSON")->required();
  cmd_gc->add_option("--frames", gc_frames, "Frame window (default: obs length)");
  cmd_gc->add_option("--fd-step", gc_h, "Finite-difference step");

  std::string plot_scene, plot_traj, plot_out;
  int plot_every = 0;
  auto* cmd_plot = app.add_subcommand("plot", "Stroboscopic SVG overlay of a trajectory");
  cmd_plot->add_option("--scene", plot_scene, "Scene JSON")->required();
  cmd_plot->add_option("--traj", plot_traj, "Trajectory JSON")->required();
  cmd_plot->add_option("--out", plot_out, "SVG output")->required();
  cmd_plot->add_option("--every", plot_every, "Frame stride");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    if (cmd_gen->parsed()) return run_gen(gen);
    if (cmd_sim->parsed()) return run_simulate(sim_scene, sim_frames, sim_out, sim_events);
    if (cmd_id->parsed()) {
      return run_identify(id_template, id_obs, id_out, id_stages, id_schedule,
                          id_max_steps, id_jobs);
    }
    if (cmd_pred->parsed()) {
      return run_predict(pred_report, pred_obs, pred_truth, pred_out, pred_horizon);
    }
    if (cmd_query->parsed()) {
      return run_query(q_scene, q_report, q_program, q_frames, q_horizon, q_out);
    }
    if (cmd_gc->parsed()) return run_gradcheck(gc_scene, gc_obs, gc_frames, gc_h);
    if (cmd_plot->parsed()) return run_plot(plot_scene, plot_traj, plot_out, plot_every);
  } catch (const NonFiniteObjective& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const GenerationExhausted& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DegenerateCenters& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const RayParallelToGround& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DegenerateConfiguration& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
