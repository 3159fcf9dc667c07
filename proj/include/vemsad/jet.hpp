#pragma once

#include "vemsad/types.hpp"

#include <array>
#include <cmath>

namespace vemsad {

/// Second-order forward-mode jet in three variables: value, gradient and
/// Hessian propagated exactly through arithmetic and elementary functions.
struct Jet {
  double v = 0.0;
  Vec3 g = Vec3::Zero();
  Mat3 H = Mat3::Zero();

  Jet() = default;
  Jet(double value) : v(value) {}  // NOLINT: constants promote implicitly
  static Jet variable(double value, int i) {
    Jet j(value);
    j.g[i] = 1.0;
    return j;
  }

  // f(a) with f' = d1, f'' = d2 at a.v
  Jet chain(double value, double d1, double d2) const {
    Jet r(value);
    r.g = d1 * g;
    r.H = d1 * H + d2 * g * g.transpose();
    return r;
  }
};

using JetVec = std::array<Jet, 3>;

inline JetVec jet_point(const Vec3& x) { return {Jet::variable(x[0], 0), Jet::variable(x[1], 1), Jet::variable(x[2], 2)}; }

inline Jet operator-(const Jet& a) {
  Jet r;
  r.v = -a.v;
  r.g = -a.g;
  r.H = -a.H;
  return r;
}
inline Jet operator+(const Jet& a, const Jet& b) {
  Jet r;
  r.v = a.v + b.v;
  r.g = a.g + b.g;
  r.H = a.H + b.H;
  return r;
}
inline Jet operator-(const Jet& a, const Jet& b) { return a + (-b); }
inline Jet operator*(const Jet& a, const Jet& b) {
  Jet r;
  r.v = a.v * b.v;
  r.g = a.v * b.g + b.v * a.g;
  r.H = a.v * b.H + b.v * a.H + a.g * b.g.transpose() + b.g * a.g.transpose();
  return r;
}
inline Jet operator+(const Jet& a, double s) { return a + Jet(s); }
inline Jet operator+(double s, const Jet& a) { return a + Jet(s); }
inline Jet operator-(const Jet& a, double s) { return a + Jet(-s); }
inline Jet operator-(double s, const Jet& a) { return Jet(s) - a; }
inline Jet operator*(double s, const Jet& a) {
  Jet r;
  r.v = s * a.v;
  r.g = s * a.g;
  r.H = s * a.H;
  return r;
}
inline Jet operator*(const Jet& a, double s) { return s * a; }
inline Jet operator/(const Jet& a, double s) { return (1.0 / s) * a; }
inline Jet reciprocal(const Jet& a) { return a.chain(1.0 / a.v, -1.0 / (a.v * a.v), 2.0 / (a.v * a.v * a.v)); }
inline Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
inline Jet operator/(double s, const Jet& b) { return s * reciprocal(b); }

inline Jet sin(const Jet& a) { return a.chain(std::sin(a.v), std::cos(a.v), -std::sin(a.v)); }
inline Jet cos(const Jet& a) { return a.chain(std::cos(a.v), -std::sin(a.v), -std::cos(a.v)); }
inline Jet exp(const Jet& a) {
  const double e = std::exp(a.v);
  return a.chain(e, e, e);
}
inline Jet log(const Jet& a) { return a.chain(std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v)); }
inline Jet sqrt(const Jet& a) {
  const double s = std::sqrt(a.v);
  return a.chain(s, 0.5 / s, -0.25 / (s * a.v));
}
inline Jet pow(const Jet& a, double k) {
  return a.chain(std::pow(a.v, k), k * std::pow(a.v, k - 1), k * (k - 1) * std::pow(a.v, k - 2));
}

}  // namespace vemsad
