#pragma once

#include <cmath>

namespace bevsim {

/// Minimal 2D vector, templated so the same code runs on plain doubles and
/// on forward-mode dual numbers.
template <typename T>
struct Vec2 {
  T x{};
  T y{};

  constexpr Vec2() = default;
  constexpr Vec2(T xv, T yv) : x(xv), y(yv) {}

  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  Vec2& operator*=(const T& s) {
    x *= s;
    y *= s;
    return *this;
  }

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(const T& s) const { return {x * s, y * s}; }
  Vec2 operator/(const T& s) const { return {x / s, y / s}; }
  Vec2 operator-() const { return {-x, -y}; }
};

template <typename T>
Vec2<T> operator*(const T& s, const Vec2<T>& v) {
  return {v.x * s, v.y * s};
}

template <typename T>
T dot(const Vec2<T>& a, const Vec2<T>& b) {
  return a.x * b.x + a.y * b.y;
}

/// z-component of the 3D cross product of two in-plane vectors.
template <typename T>
T cross(const Vec2<T>& a, const Vec2<T>& b) {
  return a.x * b.y - a.y * b.x;
}

template <typename T>
T norm_squared(const Vec2<T>& v) {
  return v.x * v.x + v.y * v.y;
}

template <typename T>
T norm(const Vec2<T>& v) {
  using std::sqrt;
  return sqrt(norm_squared(v));
}

/// Rotate by an angle given via (cos, sin) so callers can reuse the pair.
template <typename T>
Vec2<T> rotate(const Vec2<T>& v, const T& c, const T& s) {
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

using Vec2d = Vec2<double>;

}  // namespace bevsim
