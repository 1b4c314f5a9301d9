#include "bevsim/projection.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "bevsim/dual.hpp"
#include "bevsim/errors.hpp"
#include "bevsim/lbfgs.hpp"

namespace bevsim {

namespace {

Eigen::Matrix4d to_eigen(const CameraMatrix& cam) {
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) m(r, c) = cam.k[r][c];
  }
  return m;
}

}  // namespace

CameraMatrix identity_camera() {
  CameraMatrix cam;
  for (int r = 0; r < 4; ++r) cam.k[r][r] = 1.0;
  return cam;
}

double camera_condition(const CameraMatrix& cam) {
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(to_eigen(cam));
  const auto& sv = svd.singularValues();
  return sv(3) > 0.0 ? sv(0) / sv(3) : std::numeric_limits<double>::infinity();
}

Vec2d project_to_image(const Vec2d& bev, const CameraMatrix& cam) {
  const Eigen::Vector4d ground(bev.x, bev.y, cam.ground, 1.0);
  const Eigen::Vector4d c = to_eigen(cam) * ground;
  if (std::abs(c(2)) < 1e-15 * c.norm()) throw RayParallelToGround();
  return {c(0) / c(2), c(1) / c(2)};
}

Vec2d image_to_bev(const Vec2d& image, const CameraMatrix& cam) {
  const Eigen::Matrix4d inv = to_eigen(cam).inverse();
  // Back-projection is affine in the camera depth z:
  //   K^-1 · (u z, v z, z, 1) = z·m1 + m2.
  const Eigen::Vector4d m1 = inv * Eigen::Vector4d(image.x, image.y, 1.0, 0.0);
  const Eigen::Vector4d m2 = inv * Eigen::Vector4d(0.0, 0.0, 0.0, 1.0);
  const double denom = m1(2) - cam.ground * m1(3);
  const double scale = std::max(m1.cwiseAbs().maxCoeff(), m2.cwiseAbs().maxCoeff());
  if (std::abs(denom) < 1e-14 * scale) throw RayParallelToGround();
  const double z = (cam.ground * m2(3) - m2(2)) / denom;
  const Eigen::Vector4d bev = z * m1 + m2;
  if (std::abs(bev(3)) < 1e-14 * bev.cwiseAbs().maxCoeff()) throw RayParallelToGround();
  return {bev(0) / bev(3), bev(1) / bev(3)};
}

namespace {

/// BEV point of an image point under a 3x3 ground homography (bev -> image),
/// generic in the scalar so the refinement gradient comes from duals.
template <typename T>
Vec2<T> homography_back_project(const std::array<T, 9>& h, const Vec2d& image) {
  // Adjugate-based inverse of H, applied to (u, v, 1).
  const T a = h[0], b = h[1], c = h[2];
  const T d = h[3], e = h[4], f = h[5];
  const T g = h[6], i = h[7], j = h[8];
  const T u = T(image.x), v = T(image.y);
  const T x = (e * j - f * i) * u + (c * i - b * j) * v + (b * f - c * e);
  const T y = (f * g - d * j) * u + (a * j - c * g) * v + (c * d - a * f);
  const T w = (d * i - e * g) * u + (b * g - a * i) * v + (a * e - b * d);
  return {x / w, y / w};
}

CameraMatrix embed_homography(const std::array<double, 9>& h) {
  CameraMatrix cam;
  cam.ground = 1.0;
  cam.k = {{{h[0], h[1], 0.0, h[2]},
            {h[3], h[4], 0.0, h[5]},
            {h[6], h[7], 0.0, h[8]},
            {0.0, 0.0, 1.0, 0.0}}};
  return cam;
}

struct Similarity {
  double scale = 1.0;
  Vec2d offset{};
  Vec2d apply(const Vec2d& p) const { return (p - offset) * scale; }
};

Similarity normalizer(const std::vector<Vec2d>& pts) {
  Similarity t;
  for (const auto& p : pts) t.offset += p;
  t.offset = t.offset / static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += norm(p - t.offset);
  mean_dist /= static_cast<double>(pts.size());
  t.scale = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;
  return t;
}

}  // namespace

CalibrationResult calibrate_camera(
    const std::vector<std::pair<Vec2d, Vec2d>>& image_bev_pairs) {
  const std::size_t n = image_bev_pairs.size();
  if (n < 6) throw DegenerateConfiguration("calibration needs at least 6 correspondences");

  std::vector<Vec2d> image_pts, bev_pts;
  for (const auto& [img, bev] : image_bev_pairs) {
    image_pts.push_back(img);
    bev_pts.push_back(bev);
  }

  // Collinear ground points leave the homography underdetermined.
  {
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    Vec2d mean{};
    for (const auto& p : bev_pts) mean += p;
    mean = mean / static_cast<double>(n);
    for (const auto& p : bev_pts) {
      const Vec2d d = p - mean;
      cov(0, 0) += d.x * d.x;
      cov(0, 1) += d.x * d.y;
      cov(1, 0) += d.y * d.x;
      cov(1, 1) += d.y * d.y;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    if (eig.eigenvalues()(0) < 1e-10 * std::max(eig.eigenvalues()(1), 1e-12)) {
      throw DegenerateConfiguration("correspondences are collinear");
    }
  }

  const Similarity tb = normalizer(bev_pts);
  const Similarity ti = normalizer(image_pts);

  Eigen::MatrixXd a(2 * n, 9);
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2d p = tb.apply(bev_pts[k]);
    const Vec2d q = ti.apply(image_pts[k]);
    a.row(2 * k) << -p.x, -p.y, -1.0, 0.0, 0.0, 0.0, q.x * p.x, q.x * p.y, q.x;
    a.row(2 * k + 1) << 0.0, 0.0, 0.0, -p.x, -p.y, -1.0, q.y * p.x, q.y * p.y, q.y;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd hn = svd.matrixV().col(8);

  // Denormalize: H = Ti^-1 · Hn · Tb.
  Eigen::Matrix3d mhn;
  mhn << hn(0), hn(1), hn(2), hn(3), hn(4), hn(5), hn(6), hn(7), hn(8);
  Eigen::Matrix3d mtb, mti_inv;
  mtb << tb.scale, 0.0, -tb.scale * tb.offset.x, 0.0, tb.scale, -tb.scale * tb.offset.y,
      0.0, 0.0, 1.0;
  mti_inv << 1.0 / ti.scale, 0.0, ti.offset.x, 0.0, 1.0 / ti.scale, ti.offset.y, 0.0, 0.0,
      1.0;
  Eigen::Matrix3d mh = mti_inv * mhn * mtb;
  mh /= mh.norm();

  std::array<double, 9> h;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) h[3 * r + c] = mh(r, c);
  }

  // Refine on the BEV re-projection error. The objective is invariant to
  // the homography's scale, so all nine entries can move freely.
  auto objective = [&](const std::vector<double>& u) {
    double loss = 0.0;
    std::vector<double> grad(9, 0.0);
    for (int seed = -1; seed < 9; ++seed) {
      std::array<Dual, 9> hd;
      for (int k = 0; k < 9; ++k) hd[k] = Dual(u[k], k == seed ? 1.0 : 0.0);
      Dual total{};
      for (std::size_t k = 0; k < n; ++k) {
        const Vec2<Dual> p = homography_back_project(hd, image_pts[k]);
        const Dual dx = p.x - Dual(bev_pts[k].x);
        const Dual dy = p.y - Dual(bev_pts[k].y);
        total += dx * dx + dy * dy;
      }
      if (seed < 0) {
        loss = total.v;
      } else {
        grad[seed] = total.d;
      }
    }
    return std::make_pair(loss, grad);
  };

  LbfgsOptions opt;
  opt.max_steps = 25;
  const LbfgsResult res =
      lbfgs_minimize(objective, std::vector<double>(h.begin(), h.end()), opt);
  for (int k = 0; k < 9; ++k) h[k] = res.best_x[k];

  CalibrationResult out;
  out.camera = embed_homography(h);
  double err = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    err += norm(image_to_bev(image_pts[k], out.camera) - bev_pts[k]);
  }
  out.mean_bev_error = err / static_cast<double>(n);
  return out;
}

}  // namespace bevsim
