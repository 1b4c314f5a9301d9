#pragma once

#include <array>
#include <utility>
#include <vector>

#include "bevsim/vec2.hpp"

namespace bevsim {

/// 4x4 projective matrix mapping homogeneous BEV ground points
/// (x, y, ground, 1) to homogeneous camera coordinates (x·z, y·z, z, 1)·s.
/// `ground` is the constant occupying the BEV height slot.
struct CameraMatrix {
  std::array<std::array<double, 4>, 4> k{};
  double ground = 1.0;
};

CameraMatrix identity_camera();

/// Condition number estimate of K (ratio of extreme singular values).
double camera_condition(const CameraMatrix& cam);

/// Forward projection of a BEV ground point to image coordinates.
Vec2d project_to_image(const Vec2d& bev, const CameraMatrix& cam);

/// Inverse projection: solves for the camera depth z such that the
/// back-projected homogeneous point lands on the ground plane, then reads
/// off the BEV coordinates. Invariant under rescaling of K. Throws
/// RayParallelToGround when no finite depth satisfies the constraint.
Vec2d image_to_bev(const Vec2d& image, const CameraMatrix& cam);

struct CalibrationResult {
  CameraMatrix camera;
  double mean_bev_error = 0.0;  // mean BEV re-projection error over inputs
};

/// Least-squares camera fit from (image point, BEV point) pairs: a direct
/// linear transform followed by L-BFGS refinement of the BEV re-projection
/// error. Needs at least 6 non-collinear correspondences.
CalibrationResult calibrate_camera(
    const std::vector<std::pair<Vec2d, Vec2d>>& image_bev_pairs);

}  // namespace bevsim
