#pragma once

#include <cmath>
#include <limits>
#include <span>

#include "esf/common.hpp"
#include "esf/dual3.hpp"

namespace esf {

// Gaussian random fuzzy number N~(mu, sigma2, h): a Gaussian fuzzy number of
// precision h whose mode is itself Gaussian with mean mu and variance sigma2.
// sigma2 carries the aleatory uncertainty, 1/h the epistemic one; h = 0 is
// the vacuous state of total ignorance.
struct Grfn {
  double mu = 0.0;
  double sigma2 = 0.0;
  double h = 0.0;
};

// Interval on the extended real line; lo may be -inf and hi may be +inf.
struct RealInterval {
  double lo = 0.0;
  double hi = 0.0;

  static RealInterval all() {
    return {-std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
  }
  static RealInterval at_least(double y) {
    return {y, std::numeric_limits<double>::infinity()};
  }
  static RealInterval at_most(double y) {
    return {-std::numeric_limits<double>::infinity(), y};
  }
};

void validate(const Grfn& g);
void validate(const RealInterval& a);

struct BelPl {
  double bel = 0.0;
  double pl = 0.0;
};

// Contour function pl(y): plausibility of the singleton y.
double contour(const Grfn& g, double y);

// Belief and plausibility that the underlying quantity lies in the interval.
double belief(const Grfn& g, const RealInterval& a);
double plausibility(const Grfn& g, const RealInterval& a);
BelPl bel_pl(const Grfn& g, const RealInterval& a);

// Product-intersection combination; weights scale the precisions. A zero
// total precision yields the vacuous GRFN centered at the unweighted mean.
Grfn combine(std::span<const Grfn> gs, std::span<const double> weights);

// Possibility discounting by reliability r in [0, 1]: (mu, sigma2, r*h).
Grfn discount(const Grfn& g, double r);

// Independent numerical evaluation of Bel/Pl by quadrature over the random
// mode (exact when sigma2 = 0). Ground truth for the closed forms above.
BelPl oracle_bel_pl(const Grfn& g, const RealInterval& a, int n_nodes);

namespace detail {

template <class T>
struct TBelPl {
  T bel;
  T pl;
};

inline double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }
inline Dual3 clamp01(const Dual3& x) {
  if (x.v < 0.0) return Dual3(0.0);
  if (x.v > 1.0) return Dual3(1.0);
  return x;
}

// Contour of the GRFN at a fixed point u, with q = 1 + h*sigma2 and its
// square root precomputed by the caller.
template <class T>
T contour_at(const T& mu, const T& h, const T& q, const T& sq, double u) {
  using std::sqrt;
  const T du = T(u) - mu;
  T e = -(h * du * du) / (q * 2.0);
  if constexpr (std::is_same_v<T, double>) {
    return num::exp_clamped(e) / sq;
  } else {
    return exp_clamped(e) / sq;
  }
}

// Bel/Pl of [lo, hi] under N~(mu, v, h), shared by the double path and the
// Dual3 gradient path. Derivation: Bel(A) = E_M[necessity of A], Pl(A) =
// E_M[possibility of A] with M ~ N(mu, v); the Gaussian-product identity
// exp(-h(u-M)^2/2) phi((M-mu)/sigma) = pl(u) * N(m*(u), s^2) density gives
// the closed forms in terms of Phi, with m*(u) = (mu + h v u)/q and
// s^2 = v/q.
template <class T>
TBelPl<T> bel_pl_eval(const T& mu, const T& v, const T& h, double lo,
                      double hi) {
  using std::sqrt;
  const bool lo_inf = std::isinf(lo);
  const bool hi_inf = std::isinf(hi);
  if (lo_inf && hi_inf) return {T(1.0), T(1.0)};

  if (value_of(h) == 0.0) {
    // Vacuous evidence: no support for, no evidence against.
    return {T(0.0), T(1.0)};
  }

  auto cexp = [](const T& t) {
    if constexpr (std::is_same_v<T, double>) {
      return num::exp_clamped(t);
    } else {
      return exp_clamped(t);
    }
  };

  if (value_of(v) == 0.0) {
    // Degenerate random mode M = mu.
    const double m = value_of(mu);
    T bel(0.0), pl(1.0);
    if (m < lo) {
      const T d = T(lo) - mu;
      pl = cexp(-(h * d * d) * 0.5);
      bel = T(0.0);
    } else if (m > hi) {
      const T d = mu - T(hi);
      pl = cexp(-(h * d * d) * 0.5);
      bel = T(0.0);
    } else {
      pl = T(1.0);
      // Distance from the mode to the nearer finite edge.
      if (lo_inf && !hi_inf) {
        const T d = T(hi) - mu;
        bel = T(1.0) - cexp(-(h * d * d) * 0.5);
      } else if (hi_inf && !lo_inf) {
        const T d = mu - T(lo);
        bel = T(1.0) - cexp(-(h * d * d) * 0.5);
      } else {
        const T dl = mu - T(lo);
        const T dr = T(hi) - mu;
        const T d = value_of(dl) < value_of(dr) ? dl : dr;
        bel = T(1.0) - cexp(-(h * d * d) * 0.5);
      }
    }
    return {clamp01(bel), clamp01(pl)};
  }

  const T sigma = sqrt(v);
  T q;
  if constexpr (std::is_same_v<T, double>) {
    q = num::fma1(h, v);
  } else {
    q = fma1(h, v);
  }
  const T sq = sqrt(q);
  const T rtvq = sigma * sq;  // sqrt(v * q); (u - m*(u))/s == (u - mu)/rtvq

  auto PhiT = [](const T& z) {
    if constexpr (std::is_same_v<T, double>) {
      return num::Phi(z);
    } else {
      return Phi(z);
    }
  };

  if (!lo_inf && hi_inf) {
    // [y, +inf)
    const T z = (T(lo) - mu) / sigma;
    const T ply = contour_at(mu, h, q, sq, lo);
    const T b = (T(lo) - mu) / rtvq;
    const T pb = PhiT(b);
    const T pz = PhiT(z);
    const T bel = T(1.0) - pz - ply * (T(1.0) - pb);
    const T pl = T(1.0) - pz + ply * pb;
    return {clamp01(bel), clamp01(pl)};
  }
  if (lo_inf && !hi_inf) {
    // (-inf, y]
    const T z = (T(hi) - mu) / sigma;
    const T ply = contour_at(mu, h, q, sq, hi);
    const T b = (T(hi) - mu) / rtvq;
    const T pb = PhiT(b);
    const T pz = PhiT(z);
    const T bel = pz - ply * pb;
    const T pl = pz + ply * (T(1.0) - pb);
    return {clamp01(bel), clamp01(pl)};
  }

  // Finite [x, y]; the necessity kink sits at the midpoint c.
  const double c = 0.5 * (lo + hi);
  const T zx = (T(lo) - mu) / sigma;
  const T zy = (T(hi) - mu) / sigma;
  const T plx = contour_at(mu, h, q, sq, lo);
  const T ply = contour_at(mu, h, q, sq, hi);
  const T bx = (T(lo) - mu) / rtvq;
  const T by = (T(hi) - mu) / rtvq;
  // (c - m*(u))/s = (c - mu + h v (c - u)) / sqrt(v q)
  const T dxc = (T(c) - mu + h * v * T(c - lo)) / rtvq;
  const T dyc = (T(c) - mu + h * v * T(c - hi)) / rtvq;
  const T base = PhiT(zy) - PhiT(zx);
  const T bel =
      base - plx * (PhiT(dxc) - PhiT(bx)) - ply * (PhiT(by) - PhiT(dyc));
  const T pl = base + plx * PhiT(bx) + ply * (T(1.0) - PhiT(by));
  return {clamp01(bel), clamp01(pl)};
}

// Shared combination arithmetic; heff(i) is the already-weighted precision.
// Branching: no active term -> vacuous at the unweighted mean; one active
// term -> that component passes through untouched; otherwise Eq.-style sums
// accumulated left to right.
template <class MuAt, class S2At, class HeffAt>
Grfn combine_terms(std::size_t n, MuAt mu_at, S2At s2_at, HeffAt heff_at) {
  std::size_t active = 0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (heff_at(i) > 0.0) {
      ++active;
      last = i;
    }
  }
  if (active == 0) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += mu_at(i);
    return {m / static_cast<double>(n), 0.0, 0.0};
  }
  if (active == 1) {
    return {mu_at(last), s2_at(last), heff_at(last)};
  }
  double total_h = 0.0;
  double num_mu = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double he = heff_at(i);
    total_h += he;
    num_mu += he * mu_at(i);
  }
  const double mu = num_mu / total_h;
  double num_v = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double he = heff_at(i);
    num_v += he * he * s2_at(i);
  }
  const double v = num_v / (total_h * total_h);
  return {mu, v, total_h};
}

}  // namespace detail

}  // namespace esf
