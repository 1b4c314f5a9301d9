#pragma once

#include <cmath>

namespace bevsim {

/// Forward-mode scalar: carries a value and one directional derivative.
/// Branch decisions (comparisons) are made on the value part only, which
/// freezes the piecewise structure of the computation along the seed
/// direction.
struct Dual {
  double v = 0.0;  // value
  double d = 0.0;  // directional derivative

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value) {}
  constexpr Dual(double value, double deriv) : v(value), d(deriv) {}

  Dual& operator+=(const Dual& o) {
    v += o.v;
    d += o.d;
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    d -= o.d;
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    d = d * o.v + v * o.d;
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    d = (d * o.v - v * o.d) / (o.v * o.v);
    v /= o.v;
    return *this;
  }

  Dual operator-() const { return {-v, -d}; }
};

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator/(Dual a, const Dual& b) { return a /= b; }

inline bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
inline bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
inline bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
inline bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }

inline Dual sqrt(const Dual& x) {
  double r = std::sqrt(x.v);
  return {r, r > 0.0 ? x.d * 0.5 / r : 0.0};
}

inline Dual exp(const Dual& x) {
  double e = std::exp(x.v);
  return {e, x.d * e};
}

inline Dual log(const Dual& x) { return {std::log(x.v), x.d / x.v}; }

inline Dual sin(const Dual& x) { return {std::sin(x.v), x.d * std::cos(x.v)}; }

inline Dual cos(const Dual& x) { return {std::cos(x.v), -x.d * std::sin(x.v)}; }

inline Dual abs(const Dual& x) { return x.v < 0.0 ? -x : x; }

inline bool isfinite(const Dual& x) {
  return std::isfinite(x.v) && std::isfinite(x.d);
}

/// Value-part extraction usable from code templated over double/Dual.
inline constexpr double value_of(double x) { return x; }
inline constexpr double value_of(const Dual& x) { return x.v; }

inline bool is_finite_value(double x) { return std::isfinite(x); }
inline bool is_finite_value(const Dual& x) { return isfinite(x); }

}  // namespace bevsim
