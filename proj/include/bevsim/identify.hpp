#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bevsim/gradients.hpp"
#include "bevsim/lbfgs.hpp"
#include "bevsim/scene.hpp"

namespace bevsim {

/// Curriculum windows, per-stage stop thresholds, and step caps for the
/// staged recovery procedure.
struct FitSchedule {
  std::vector<FrameRange> curriculum{{0, 40}, {0, 80}, {0, 128}};
  std::vector<double> curriculum_thresholds{0.0002, 0.001, 0.01};
  double initial_state_threshold = 0.0005;
  double global_threshold = 0.0;   // stage 1 runs its full step budget
  int max_steps = 20;
  int global_max_steps = 30;       // outer steps of the reduced stage-1 fit
  int prediction_refit_frames = 20;
};

/// Provenance of every returned parameter; no silent defaults.
enum class FitFlag {
  Fitted,
  Pinned,            // mass gauge: first colliding body pinned to 1
  Defaulted,         // no constraining data; spec default value kept
  FromObservation,   // set directly from observed samples, not optimized
  FromTemplate,      // taken from the input scene template
  Unidentifiable,    // structurally absent from the loss; kept at init
};
const char* fit_flag_name(FitFlag f);

/// Earliest frame at which each body comes within R_i + R_j plus a 5%
/// margin of any other body; nullopt when it never does.
std::vector<std::optional<int>> mark_first_collisions(const Trajectory& observed,
                                                      const std::vector<double>& radii);

/// Same idea against wall segments (distance below R_b plus margin).
std::vector<std::optional<int>> mark_first_wall_contacts(const Trajectory& observed,
                                                         const std::vector<double>& radii,
                                                         const std::vector<Wall>& walls);

/// Per-body earliest interaction of either kind.
std::vector<std::optional<int>> combine_marks(const std::vector<std::optional<int>>& a,
                                              const std::vector<std::optional<int>>& b);

struct GlobalFitResult {
  double lambda1 = 0.1;
  double lambda2 = 0.1;
  double lambda3 = 0.1;
  std::map<ShapeKind, double> radius;
  std::map<std::string, FitFlag> flags;
  std::vector<double> trace;  // final joint polish trace
};

/// Stage 1: sample-independent parameters (resistance coefficients and the
/// per-shape-class radius) fitted jointly from K observations, with
/// per-scene initial states refit as nuisance variables. The radius has no
/// usable gradient (contact timing is discrete), so it is recovered by a
/// deterministic coordinate scan of the same loss with per-scene mass and
/// restitution treated as additional nuisance.
GlobalFitResult fit_global(const std::vector<SceneConfig>& templates,
                           const std::vector<Trajectory>& observations,
                           const FitSchedule& schedule = {});

struct InitialFitResult {
  SceneConfig scene;  // template with fitted initial states
  std::map<int, std::vector<double>> traces;     // body id -> loss trace
  std::map<std::string, FitFlag> flags;          // per parameter label
};

/// Stage 2: per-body collision-independent state (l0, v0) from the frames
/// before each body's first interaction. Cube angles are initialized from
/// observed angle samples when present (BEV positions carry no pre-contact
/// angle signal). Throws InsufficientPreCollisionFrames when a body has
/// fewer than 3 usable frames.
InitialFitResult fit_initial(const SceneConfig& tmpl, const Trajectory& observed,
                             const std::vector<std::optional<int>>& first_interaction,
                             const FitSchedule& schedule = {});

struct CollisionFitResult {
  SceneConfig scene;
  std::vector<std::vector<double>> traces;  // one per curriculum window
  std::map<std::string, FitFlag> flags;
  int pinned_body = -1;  // body id whose mass is the gauge
};

/// Stage 3: mass and restitution over growing frame windows, each window
/// warm-started from the last. The first colliding body's mass is pinned
/// to 1 (only ratios enter the impulse law); bodies that never collide
/// keep defaults (m = 1, r = 0.8) and are flagged.
CollisionFitResult fit_collision_params(const SceneConfig& scene_with_states,
                                        const Trajectory& observed,
                                        const std::vector<std::optional<int>>& pair_marks,
                                        const std::vector<std::optional<int>>& wall_marks,
                                        const FitSchedule& schedule = {});

/// Ablation baseline: same parameter set and total step budget as the
/// curriculum, optimized directly on the full window.
CollisionFitResult fit_collision_direct(const SceneConfig& scene_with_states,
                                        const Trajectory& observed,
                                        const std::vector<std::optional<int>>& pair_marks,
                                        const std::vector<std::optional<int>>& wall_marks,
                                        const FitSchedule& schedule, int step_budget);

struct RefitResult {
  SceneConfig scene;
  std::vector<double> trace;
};

/// Stage 5: re-optimize sample-dependent parameters against only the last
/// 20 observed frames; the state at the final observed frame then seeds
/// predictive rollouts.
RefitResult refit_for_prediction(const SceneConfig& fitted, const Trajectory& observed,
                                 const std::vector<std::optional<int>>& pair_marks,
                                 const std::vector<std::optional<int>>& wall_marks,
                                 const FitSchedule& schedule = {});

struct StageSelection {
  bool global = true;
  bool initial = true;
  bool collision = true;
  bool refit = true;
};

struct FitReport {
  SceneConfig fitted;
  SceneConfig refit_scene;  // after stage 5 (equals fitted when skipped)
  std::vector<std::optional<int>> first_collisions;  // per body index
  std::map<std::string, std::vector<double>> stage_traces;
  std::map<std::string, std::string> flags;
  std::map<std::string, double> stage_seconds;
};

/// Runs the selected stages for one observation. Globals may be supplied
/// (fitted earlier or known); otherwise template values are used and
/// flagged as such.
FitReport identify_scene(const SceneConfig& tmpl, const Trajectory& observed,
                         const GlobalFitResult* globals, const FitSchedule& schedule,
                         const StageSelection& stages);

/// Body states after `frame` frames of rollout, as a new scene config.
SceneConfig advance_to_frame(const SceneConfig& scene, int frame);

/// Mean squared position error between a rollout and the reference over
/// frames [begin, end], averaged over bodies and frames.
double rollout_mse(const Trajectory& rollout, const Trajectory& reference, int begin,
                   int end);

}  // namespace bevsim
