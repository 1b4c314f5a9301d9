#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "bevsim/dual.hpp"
#include "bevsim/errors.hpp"
#include "bevsim/scene.hpp"
#include "bevsim/vec2.hpp"

namespace bevsim {

/// Contact between body i and body j (or a wall). `normal` is the unit
/// direction d1 of the force acting on body i; the force on j acts along
/// -normal (d1 + d2 = 0).
template <typename T>
struct ContactT {
  int i = -1;
  int j = -1;     // -1 for wall contacts
  int wall = -1;  // wall index, or -1
  Vec2<T> normal{};
  Vec2<T> point{};
  T penetration{};
};

using Contact = ContactT<double>;

/// Overlap test for two circles. Exactly-touching circles do not contact
/// (the boundary is open). Throws DegenerateCenters on coincident centers,
/// which is unreachable from a valid scene.
template <typename T>
std::optional<ContactT<T>> detect_circle_circle(const Vec2<T>& c1, const T& r1,
                                                const Vec2<T>& c2, const T& r2) {
  const Vec2<T> delta = c1 - c2;
  const T dist2 = norm_squared(delta);
  const T reach = r1 + r2;
  if (!(dist2 < reach * reach)) return std::nullopt;
  if (value_of(dist2) < 1e-18) throw DegenerateCenters();
  using std::sqrt;
  const T dist = sqrt(dist2);
  ContactT<T> c;
  c.normal = delta / dist;
  c.point = c2 + delta * (r2 / reach);
  c.penetration = reach - dist;
  return c;
}

/// Circle against an oriented square (half-extent `half`, rotation `angle`).
/// Works in the rectangle's local frame: side regions give a face-normal
/// contact, corner regions contact iff the corner lies within the circle.
/// The returned normal is the world-frame force direction on the circle.
template <typename T>
std::optional<ContactT<T>> detect_circle_rect(const Vec2<T>& center, const T& radius,
                                              const Vec2<T>& rect_center, const T& half,
                                              const T& angle) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const T c = cos(angle);
  const T s = sin(angle);
  // Into the local frame (rotate by -angle).
  const Vec2<T> local = rotate(center - rect_center, c, -s);
  const T ax = local.x < T(0) ? -local.x : local.x;
  const T ay = local.y < T(0) ? -local.y : local.y;
  const T sx = local.x < T(0) ? T(-1) : T(1);
  const T sy = local.y < T(0) ? T(-1) : T(1);

  Vec2<T> local_normal{};
  Vec2<T> local_point{};
  T penetration{};

  if (ax <= half && ay <= half) {
    // Center inside the rectangle: push out through the nearest face.
    if (half - ax <= half - ay) {
      local_normal = {sx, T(0)};
      local_point = {sx * half, local.y};
      penetration = half + radius - ax;
    } else {
      local_normal = {T(0), sy};
      local_point = {local.x, sy * half};
      penetration = half + radius - ay;
    }
  } else if (ax <= half) {
    // Side band above/below.
    if (!(ay < half + radius)) return std::nullopt;
    local_normal = {T(0), sy};
    local_point = {local.x, sy * half};
    penetration = half + radius - ay;
  } else if (ay <= half) {
    if (!(ax < half + radius)) return std::nullopt;
    local_normal = {sx, T(0)};
    local_point = {sx * half, local.y};
    penetration = half + radius - ax;
  } else {
    // Corner region: contact iff the nearest corner is inside the circle.
    const Vec2<T> corner{sx * half, sy * half};
    const Vec2<T> to_center = local - corner;
    const T d2 = norm_squared(to_center);
    if (!(d2 < radius * radius)) return std::nullopt;
    const T d = sqrt(d2);
    local_normal = to_center / d;
    local_point = corner;
    penetration = radius - d;
  }

  ContactT<T> out;
  out.normal = rotate(local_normal, c, s);
  out.point = rect_center + rotate(local_point, c, s);
  out.penetration = penetration;
  return out;
}

namespace detail {

template <typename T>
std::array<Vec2<T>, 4> rect_corners(const Vec2<T>& center, const T& half, const T& angle) {
  using std::cos;
  using std::sin;
  const T c = cos(angle);
  const T s = sin(angle);
  return {center + rotate(Vec2<T>{half, half}, c, s),
          center + rotate(Vec2<T>{-half, half}, c, s),
          center + rotate(Vec2<T>{-half, -half}, c, s),
          center + rotate(Vec2<T>{half, -half}, c, s)};
}

/// Clip a convex polygon against the half-plane dot(n, p) <= limit.
template <typename T>
std::vector<Vec2<T>> clip_half_plane(const std::vector<Vec2<T>>& poly, const Vec2<T>& n,
                                     const T& limit) {
  std::vector<Vec2<T>> out;
  const std::size_t count = poly.size();
  for (std::size_t k = 0; k < count; ++k) {
    const Vec2<T>& a = poly[k];
    const Vec2<T>& b = poly[(k + 1) % count];
    const T da = dot(n, a) - limit;
    const T db = dot(n, b) - limit;
    const bool ina = !(da > T(0));
    const bool inb = !(db > T(0));
    if (ina) out.push_back(a);
    if (ina != inb) {
      const T t = da / (da - db);
      out.push_back(a + (b - a) * t);
    }
  }
  return out;
}

template <typename T>
Vec2<T> polygon_centroid(const std::vector<Vec2<T>>& poly) {
  if (poly.empty()) return {};
  T area2{};
  Vec2<T> acc{};
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Vec2<T>& a = poly[k];
    const Vec2<T>& b = poly[(k + 1) % poly.size()];
    const T w = cross(a, b);
    area2 += w;
    acc += (a + b) * w;
  }
  if (value_of(area2) * value_of(area2) < 1e-24) {
    // Degenerate sliver: fall back to the vertex mean.
    Vec2<T> mean{};
    for (const auto& p : poly) mean += p;
    return mean / T(static_cast<double>(poly.size()));
  }
  return acc / (area2 * T(3));
}

}  // namespace detail

/// Oriented square vs. oriented square via the separating-axis test over the
/// four face normals. The normal is the minimal-penetration axis oriented
/// from B toward A; the contact point is the centroid of the clipped overlap
/// polygon.
template <typename T>
std::optional<ContactT<T>> detect_rect_rect(const Vec2<T>& ca, const T& ha, const T& aa,
                                            const Vec2<T>& cb, const T& hb, const T& ab) {
  using std::cos;
  using std::sin;
  const auto corners_a = detail::rect_corners(ca, ha, aa);
  const auto corners_b = detail::rect_corners(cb, hb, ab);

  const std::array<Vec2<T>, 4> axes = {
      Vec2<T>{cos(aa), sin(aa)}, Vec2<T>{-sin(aa), cos(aa)},
      Vec2<T>{cos(ab), sin(ab)}, Vec2<T>{-sin(ab), cos(ab)}};

  T best_overlap{};
  Vec2<T> best_axis{};
  bool first = true;
  for (const auto& axis : axes) {
    T min_a = dot(axis, corners_a[0]), max_a = min_a;
    T min_b = dot(axis, corners_b[0]), max_b = min_b;
    for (int k = 1; k < 4; ++k) {
      const T pa = dot(axis, corners_a[k]);
      const T pb = dot(axis, corners_b[k]);
      if (pa < min_a) min_a = pa;
      if (pa > max_a) max_a = pa;
      if (pb < min_b) min_b = pb;
      if (pb > max_b) max_b = pb;
    }
    const T overlap = (max_a < max_b ? max_a : max_b) - (min_a > min_b ? min_a : min_b);
    if (!(overlap > T(0))) return std::nullopt;
    if (first || overlap < best_overlap) {
      best_overlap = overlap;
      best_axis = axis;
      first = false;
    }
  }

  // Orient the minimal axis from B toward A.
  if (dot(best_axis, ca - cb) < T(0)) best_axis = -best_axis;

  // Overlap polygon: clip A's corners against B's four half-planes.
  std::vector<Vec2<T>> poly(corners_a.begin(), corners_a.end());
  const T cb_cos = cos(ab);
  const T cb_sin = sin(ab);
  const std::array<Vec2<T>, 2> b_axes = {Vec2<T>{cb_cos, cb_sin}, Vec2<T>{-cb_sin, cb_cos}};
  for (const auto& axis : b_axes) {
    const T mid = dot(axis, cb);
    poly = detail::clip_half_plane(poly, axis, mid + hb);
    if (poly.empty()) break;
    poly = detail::clip_half_plane(poly, -axis, -(mid - hb));
    if (poly.empty()) break;
  }

  ContactT<T> out;
  out.normal = best_axis;
  out.point = poly.empty() ? (ca + cb) / T(2) : detail::polygon_centroid(poly);
  out.penetration = best_overlap;
  return out;
}

/// Circle footprint against a wall segment: contact iff the distance from
/// the center to the segment is below the radius. Normal points from the
/// wall toward the center.
template <typename T>
std::optional<ContactT<T>> detect_circle_wall(const Vec2<T>& center, const T& radius,
                                              const Wall& wall) {
  using std::sqrt;
  const Vec2<T> a{T(wall.a.x), T(wall.a.y)};
  const Vec2<T> b{T(wall.b.x), T(wall.b.y)};
  const Vec2<T> ab = b - a;
  const T len2 = norm_squared(ab);
  T t = dot(center - a, ab) / len2;
  if (t < T(0)) t = T(0);
  if (t > T(1)) t = T(1);
  const Vec2<T> closest = a + ab * t;
  const Vec2<T> delta = center - closest;
  const T d2 = norm_squared(delta);
  if (!(d2 < radius * radius)) return std::nullopt;
  if (value_of(d2) < 1e-18) return std::nullopt;  // center on the wall line
  const T d = sqrt(d2);
  ContactT<T> out;
  out.normal = delta / d;
  out.point = closest;
  out.penetration = radius - d;
  return out;
}

template <typename T>
struct ImpulseResult {
  Vec2<T> dv_i{};
  Vec2<T> dv_j{};
  bool applied = false;        // false when the approach gate rejected
  double approach_speed = 0.0; // -(v_i - v_j)·d1 at resolution time
};

/// Impulse exchange along the contact normal. Fires only while the bodies
/// approach each other along d1; tangential components are untouched and
/// contact friction is ignored.
template <typename T>
ImpulseResult<T> resolve_impulse(const ContactT<T>& contact, const T& mass_i,
                                 const T& restitution_i, const Vec2<T>& vel_i,
                                 const T& mass_j, const T& restitution_j,
                                 const Vec2<T>& vel_j) {
  ImpulseResult<T> out;
  const Vec2<T> rel = vel_i - vel_j;
  const T along = dot(contact.normal, rel);
  out.approach_speed = -value_of(along);
  if (!(along < T(0))) return out;  // separating or sliding: no impulse

  const T e = restitution_i * restitution_j;
  const T total = mass_i + mass_j;
  out.dv_i = contact.normal * (-(T(1) + e) * (mass_j / total) * along);
  // d2 = -d1 and d2·(v_j - v_i) = d1·(v_i - v_j), so the j-side mirrors i.
  out.dv_j = -contact.normal * (-(T(1) + e) * (mass_i / total) * along);
  out.applied = true;
  return out;
}

/// Moment of inertia of the BEV footprint: (1/6)·m·(2R)^2 for squares.
template <typename T>
T moment_of_inertia(const T& mass, const T& half_extent) {
  const T side = half_extent * T(2);
  return mass * side * side / T(6);
}

/// Spin change from the linear impulse applied at the contact point.
/// Circle footprints take no torque: the normal always passes through the
/// center.
template <typename T>
T angular_impulse(ShapeKind shape, const T& mass, const T& half_extent,
                  const Vec2<T>& body_center, const Vec2<T>& contact_point,
                  const Vec2<T>& delta_v) {
  if (has_circle_footprint(shape)) return T(0);
  const Vec2<T> impulse = delta_v * mass;
  const Vec2<T> arm = contact_point - body_center;
  return cross(arm, impulse) / moment_of_inertia(mass, half_extent);
}

/// Wall bounce: reflect the normal velocity component scaled by the product
/// of body and wall restitution; keep the tangential component. Zero when
/// the body moves away from the wall.
template <typename T>
Vec2<T> resolve_wall(const ContactT<T>& contact, const T& restitution_body,
                     double restitution_wall, const Vec2<T>& vel) {
  const T along = dot(contact.normal, vel);
  if (!(along < T(0))) return {};
  const T e = restitution_body * T(restitution_wall);
  return contact.normal * (-(T(1) + e) * along);
}

}  // namespace bevsim
