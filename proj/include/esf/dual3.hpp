#pragma once

#include <cmath>

#include "esf/common.hpp"

namespace esf {

// Forward-mode scalar carrying partial derivatives with respect to the three
// GRFN parameters (mu, sigma2, h). The value channel performs exactly the
// same double operations as a plain-double evaluation, so instantiating the
// belief/plausibility templates with Dual3 reproduces the double path bit for
// bit while also producing exact derivatives.
struct Dual3 {
  double v = 0.0;
  double d0 = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;

  Dual3() = default;
  Dual3(double value) : v(value) {}
  Dual3(double value, double g0, double g1, double g2)
      : v(value), d0(g0), d1(g1), d2(g2) {}

  static Dual3 seeded(double value, int slot) {
    Dual3 r(value);
    if (slot == 0) r.d0 = 1.0;
    if (slot == 1) r.d1 = 1.0;
    if (slot == 2) r.d2 = 1.0;
    return r;
  }
};

inline Dual3 operator-(const Dual3& a) { return {-a.v, -a.d0, -a.d1, -a.d2}; }

inline Dual3 operator+(const Dual3& a, const Dual3& b) {
  return {a.v + b.v, a.d0 + b.d0, a.d1 + b.d1, a.d2 + b.d2};
}
inline Dual3 operator-(const Dual3& a, const Dual3& b) {
  return {a.v - b.v, a.d0 - b.d0, a.d1 - b.d1, a.d2 - b.d2};
}
inline Dual3 operator*(const Dual3& a, const Dual3& b) {
  return {a.v * b.v, a.d0 * b.v + b.d0 * a.v, a.d1 * b.v + b.d1 * a.v,
          a.d2 * b.v + b.d2 * a.v};
}
inline Dual3 operator/(const Dual3& a, const Dual3& b) {
  const double q = a.v / b.v;
  const double inv = 1.0 / b.v;
  return {q, (a.d0 - q * b.d0) * inv, (a.d1 - q * b.d1) * inv,
          (a.d2 - q * b.d2) * inv};
}

inline Dual3 sqrt(const Dual3& a) {
  const double s = std::sqrt(a.v);
  const double w = 0.5 / s;
  return {s, a.d0 * w, a.d1 * w, a.d2 * w};
}

inline Dual3 log(const Dual3& a) {
  const double inv = 1.0 / a.v;
  return {std::log(a.v), a.d0 * inv, a.d1 * inv, a.d2 * inv};
}

inline Dual3 exp_clamped(const Dual3& a) {
  if (a.v < -745.0) return Dual3(std::exp(-745.0));
  const double e = std::exp(a.v);
  return {e, a.d0 * e, a.d1 * e, a.d2 * e};
}

inline Dual3 Phi(const Dual3& a) {
  const double p = num::Phi(a.v);
  const double w = num::phi_pdf(a.v);
  return {p, a.d0 * w, a.d1 * w, a.d2 * w};
}

// q = fma(h, v, 1): same fused value as the double path.
inline Dual3 fma1(const Dual3& a, const Dual3& b) {
  return {std::fma(a.v, b.v, 1.0), a.d0 * b.v + b.d0 * a.v,
          a.d1 * b.v + b.d1 * a.v, a.d2 * b.v + b.d2 * a.v};
}

inline double value_of(double x) { return x; }
inline double value_of(const Dual3& x) { return x.v; }

namespace num {
// double counterparts used by the shared templates.
inline double fma1(double a, double b) { return std::fma(a, b, 1.0); }
}  // namespace num

}  // namespace esf
