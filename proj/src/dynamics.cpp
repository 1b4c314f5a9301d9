#include "bevsim/dynamics.hpp"

#include <sstream>

#include "bevsim/errors.hpp"

namespace bevsim {

Trajectory grid_to_trajectory(const RolloutGrid<double>& grid, const SceneConfig& scene) {
  Trajectory traj;
  traj.frames.reserve(grid.positions.size());
  for (std::size_t f = 0; f < grid.positions.size(); ++f) {
    FrameSample frame;
    frame.frame = static_cast<int>(f);
    frame.bodies.reserve(scene.bodies.size());
    for (std::size_t b = 0; b < scene.bodies.size(); ++b) {
      const Vec2d& p = grid.positions[f][b];
      BodySample s;
      s.id = scene.bodies[b].id;
      s.x = p.x;
      s.y = p.y;
      s.alpha = grid.angles[f][b];
      s.present = scene.visibility.contains(p);
      frame.bodies.push_back(s);
    }
    traj.frames.push_back(std::move(frame));
  }
  return traj;
}

SimulationResult simulate(const SceneConfig& scene, int n_frames) {
  auto errors = validate_scene(scene);
  if (!errors.empty()) {
    std::ostringstream msg;
    msg << "invalid scene:";
    for (const auto& e : errors) msg << " [" << e << "]";
    throw InvalidScene(msg.str());
  }
  if (n_frames < 1) throw InvalidScene("n_frames must be >= 1");

  SimulationResult result;
  auto world = make_sim_world<double>(scene);
  const RolloutGrid<double> grid = simulate_world(std::move(world), n_frames, &result.contacts);
  result.trajectory = grid_to_trajectory(grid, scene);
  result.events = extract_events(result.trajectory, scene, result.contacts);
  return result;
}

}  // namespace bevsim
