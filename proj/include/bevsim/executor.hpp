#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bevsim/events.hpp"
#include "bevsim/scene.hpp"

namespace bevsim {

/// Speed threshold separating the Moving / Stationary dynamic concepts.
inline constexpr double kMoveSpeedThreshold = 0.02;

/// Event value that can also be one of the Start/End anchors. Anchors
/// order before/after every real event.
struct ExecEvent {
  enum class Sentinel { None, Start, End };
  Sentinel sentinel = Sentinel::None;
  Event event;

  bool operator==(const ExecEvent& o) const = default;
};

/// Typed value flowing between program operations.
struct Value {
  enum class Tag { Objects, Object, Events, Event, Int, Bool, Concept, Frame };
  Tag tag = Tag::Bool;
  std::vector<int> objects;
  int object = -1;
  std::vector<ExecEvent> events;
  ExecEvent event;
  long long integer = 0;
  bool boolean = false;
  std::string concept_name;
  int frame = 0;

  nlohmann::json to_json() const;
};

struct ProgramStep {
  std::string op;
  nlohmann::json args = nlohmann::json::array();
};

using Program = std::vector<ProgramStep>;

Program program_from_json(const nlohmann::json& j);

/// Everything a program execution may touch: the fitted scene, its factual
/// rollout and events, the causal graph, and the scene used for predictive
/// rollouts (post-refit when available). Counterfactual and predictive
/// branches re-simulate on demand.
struct ExecutionContext {
  SceneConfig scene;
  SceneConfig prediction_scene;  // defaults to `scene`
  Trajectory trajectory;
  EventLog events;
  CausalGraph graph;
  int observed_frames = 0;
  int horizon = 0;

  // Mass modifications registered by Apply_heavier / Apply_lighter; a
  // modified body is kept (not removed) by Counterfactual_simulation.
  std::map<int, double> mass_override;
  std::optional<EventLog> predicted_cache;
};

/// Builds a context by rolling out the fitted scene for the clip length.
/// Horizon <= 0 defaults to the clip length.
ExecutionContext make_context(const SceneConfig& fitted, int observed_frames,
                              int horizon = -1);
ExecutionContext make_context(const SceneConfig& fitted,
                              const SceneConfig& prediction_scene, int observed_frames,
                              int horizon = -1);

/// Runs the operations left to right, threading values; "PIPE" arguments
/// reference the previous value, nested arrays run as sub-programs.
Value execute_program(const Program& program, ExecutionContext& ctx);

/// Re-simulation with one body removed; events tagged Counterfactual.
std::pair<EventLog, Trajectory> counterfactual_simulation(const SceneConfig& scene,
                                                          int body_id, int n_frames);

/// Rollout past the clip end; events strictly after the last observed
/// frame, tagged Predicted.
EventLog predictive_simulation(const SceneConfig& prediction_scene, int observed_frames,
                               int horizon);

/// Mass edits used by counterfactual questions (exactly x5 / x0.2).
SceneConfig apply_heavier(const SceneConfig& scene, int body_id);
SceneConfig apply_lighter(const SceneConfig& scene, int body_id);

}  // namespace bevsim
