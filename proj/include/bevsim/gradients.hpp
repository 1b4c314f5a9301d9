#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bevsim/dynamics.hpp"
#include "bevsim/scene.hpp"

namespace bevsim {

/// Smooth maps from an unconstrained optimizer variable u to a physical
/// value x. Positivity and bound constraints are enforced by construction
/// so the optimizer never sees an infeasible point.
enum class Reparam {
  Identity,        // x = u
  ExpPositive,     // x = exp(u), x > 0
  BoundedSigmoid,  // x = r_max / (1 + exp(-u)), x in (0, r_max)
};

double reparam_decode(double u, Reparam r);
double reparam_encode(double x, Reparam r);

enum class ParamField {
  PosX, PosY, VelX, VelY, Angle, Omega,   // per body
  Mass, Restitution,                      // per body
  RadiusClass,                            // per shape class (global)
  Lambda1, Lambda2, Lambda3, LambdaOmega, // global
};

/// Selects one fittable scalar. `scene` indexes the observation the
/// parameter belongs to (multi-scene fits); -1 body means global.
struct ParamId {
  ParamField field = ParamField::VelX;
  int scene = 0;
  int body = -1;
  ShapeKind shape_class = ShapeKind::Sphere;  // only for RadiusClass

  bool is_global() const;
  std::string label() const;
};

struct Param {
  ParamId id;
  double u = 0.0;  // unconstrained optimizer value
  Reparam reparam = Reparam::Identity;
};

/// Ordered parameter subset with its reparameterizations. The optimizer
/// works on the unconstrained vector; decode() gives physical values.
struct ParamVector {
  std::vector<Param> params;

  std::size_t size() const { return params.size(); }
  std::vector<double> unconstrained() const;
  void set_unconstrained(const std::vector<double>& u);
  double physical(std::size_t k) const;

  /// Append a parameter initialized from its physical value.
  void push(ParamId id, double physical_value, Reparam reparam);
};

/// Default reparameterization for each field.
Reparam default_reparam(ParamField field);

/// Frame window [begin, end) over trajectory samples.
struct FrameRange {
  int begin = 0;
  int end = 0;
};

/// Restricts which (body, frame) samples enter the loss. Bodies lists
/// trajectory body ids (empty = all); body_end_frame gives per-body
/// exclusive frame cutoffs (e.g. pre-collision windows). Samples whose
/// observed presence flag is false are always excluded.
struct SampleMask {
  std::vector<int> bodies;
  std::map<int, int> body_end_frame;

  bool includes(int body_id, int frame) const;
};

/// Sum of squared distances between simulated and observed positions over
/// the masked window. Throws EmptyMask when nothing is selected.
double trajectory_loss(const Trajectory& simulated, const Trajectory& observed,
                       FrameRange range, const SampleMask& mask = {});

/// One observation's fitting problem: a scene template plus the observed
/// trajectory and the masked window the loss runs over.
struct FitScene {
  SceneConfig scene;
  Trajectory observed;
  FrameRange range;
  SampleMask mask;
  bool contacts = true;  // off for collision-independent stages
};

struct GradResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d u_k
};

/// Loss of the decoded parameter vector over all fit scenes (summed in
/// fixed scene order).
double loss_value(const std::vector<FitScene>& scenes, const ParamVector& theta);

/// Loss and exact gradient by forward-mode directional-derivative
/// propagation through every simulation step: one propagation pass per
/// parameter, restricted to the scenes that parameter touches. Collision
/// branch structure is frozen along each pass.
GradResult grad_loss(const std::vector<FitScene>& scenes, const ParamVector& theta);

/// Central finite differences in the unconstrained variables; test oracle.
std::vector<double> finite_diff_grad(const std::vector<FitScene>& scenes,
                                     const ParamVector& theta, double h);

/// Decoded world for one scene with theta applied; seed_param picks the
/// parameter whose derivative is propagated (-1 for none).
SimWorld<Dual> apply_params_dual(const SceneConfig& scene, const ParamVector& theta,
                                 int scene_index, int seed_param);
SimWorld<double> apply_params(const SceneConfig& scene, const ParamVector& theta,
                              int scene_index);

/// Writes theta's decoded physical values back into a scene config.
SceneConfig scene_with_params(const SceneConfig& scene, const ParamVector& theta,
                              int scene_index);

}  // namespace bevsim
