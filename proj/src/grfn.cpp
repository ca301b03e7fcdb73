#include "esf/grfn.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace esf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Possibility of [lo, hi] under a Gaussian fuzzy number with mode m.
double poss_at(double m, double h, double lo, double hi) {
  if (m < lo) {
    const double d = lo - m;
    return num::exp_clamped(-0.5 * h * d * d);
  }
  if (m > hi) {
    const double d = m - hi;
    return num::exp_clamped(-0.5 * h * d * d);
  }
  return 1.0;
}

// Necessity of [lo, hi]: one minus the supremum of membership over the
// complement, which is approached at the nearer finite edge.
double nec_at(double m, double h, double lo, double hi) {
  if (m < lo || m > hi) return 0.0;
  const double dl = std::isinf(lo) ? kInf : m - lo;
  const double dr = std::isinf(hi) ? kInf : hi - m;
  const double d = std::min(dl, dr);
  if (std::isinf(d)) return 1.0;  // full line
  return 1.0 - num::exp_clamped(-0.5 * h * d * d);
}

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    weights[n - 1 - i] = weights[i];
  }
}

}  // namespace

void validate(const Grfn& g) {
  if (!std::isfinite(g.mu) || !std::isfinite(g.sigma2) || !std::isfinite(g.h))
    throw DomainError("grfn: parameters must be finite");
  if (g.sigma2 < 0.0) throw DomainError("grfn: sigma2 must be nonnegative");
  if (g.h < 0.0) throw DomainError("grfn: h must be nonnegative");
}

void validate(const RealInterval& a) {
  if (std::isnan(a.lo) || std::isnan(a.hi))
    throw DomainError("interval: NaN endpoint");
  if (a.lo > a.hi) throw DomainError("interval: lo > hi");
  if (a.lo == kInf || a.hi == -kInf)
    throw DomainError("interval: empty at infinity");
}

double contour(const Grfn& g, double y) {
  validate(g);
  if (!std::isfinite(y)) throw DomainError("contour: y must be finite");
  if (g.h == 0.0) return 1.0;
  const double q = num::fma1(g.h, g.sigma2);
  const double d = y - g.mu;
  return num::exp_clamped(-g.h * d * d / (2.0 * q)) / std::sqrt(q);
}

BelPl bel_pl(const Grfn& g, const RealInterval& a) {
  validate(g);
  validate(a);
  const auto r = detail::bel_pl_eval<double>(g.mu, g.sigma2, g.h, a.lo, a.hi);
  return {r.bel, r.pl};
}

double belief(const Grfn& g, const RealInterval& a) { return bel_pl(g, a).bel; }

double plausibility(const Grfn& g, const RealInterval& a) {
  return bel_pl(g, a).pl;
}

Grfn combine(std::span<const Grfn> gs, std::span<const double> weights) {
  if (gs.empty()) throw DomainError("combine: empty sequence");
  if (gs.size() != weights.size())
    throw DomainError("combine: weight count mismatch");
  for (std::size_t i = 0; i < gs.size(); ++i) {
    validate(gs[i]);
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
      throw DomainError("combine: weights must be finite and nonnegative");
  }
  return detail::combine_terms(
      gs.size(), [&](std::size_t i) { return gs[i].mu; },
      [&](std::size_t i) { return gs[i].sigma2; },
      [&](std::size_t i) { return weights[i] * gs[i].h; });
}

Grfn discount(const Grfn& g, double r) {
  validate(g);
  if (!(r >= 0.0 && r <= 1.0)) throw DomainError("discount: r outside [0,1]");
  return {g.mu, g.sigma2, r * g.h};
}

BelPl oracle_bel_pl(const Grfn& g, const RealInterval& a, int n_nodes) {
  validate(g);
  validate(a);
  if (n_nodes < 64) throw DomainError("oracle_bel_pl: n_nodes must be >= 64");

  if (std::isinf(a.lo) && std::isinf(a.hi)) return {1.0, 1.0};
  if (g.sigma2 == 0.0) {
    // Exact: the random mode is a point mass at mu.
    return {nec_at(g.mu, g.h, a.lo, a.hi), poss_at(g.mu, g.h, a.lo, a.hi)};
  }

  const double sigma = std::sqrt(g.sigma2);
  const double m_lo = g.mu - 12.0 * sigma;
  const double m_hi = g.mu + 12.0 * sigma;

  // Panel edges: integration bounds, interval endpoints, and the necessity
  // kink at the midpoint; panels refined to at most one sigma wide.
  std::vector<double> edges = {m_lo, m_hi};
  auto add_edge = [&](double x) {
    if (std::isfinite(x) && x > m_lo && x < m_hi) edges.push_back(x);
  };
  add_edge(a.lo);
  add_edge(a.hi);
  if (std::isfinite(a.lo) && std::isfinite(a.hi)) add_edge(0.5 * (a.lo + a.hi));
  std::sort(edges.begin(), edges.end());

  std::vector<double> nodes, weights;
  gauss_legendre(n_nodes, nodes, weights);

  double bel = 0.0;
  double pl = 0.0;
  const double inv_sigma = 1.0 / sigma;
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    const double span = edges[e + 1] - edges[e];
    if (span <= 0.0) continue;
    const int pieces = std::max(1, static_cast<int>(std::ceil(span / sigma)));
    const double step = span / pieces;
    for (int p = 0; p < pieces; ++p) {
      const double lo = edges[e] + p * step;
      const double half = 0.5 * step;
      const double mid = lo + half;
      for (int k = 0; k < n_nodes; ++k) {
        const double m = mid + half * nodes[k];
        const double z = (m - g.mu) * inv_sigma;
        const double dens = num::phi_pdf(z) * inv_sigma;
        const double w = weights[k] * half * dens;
        bel += w * nec_at(m, g.h, a.lo, a.hi);
        pl += w * poss_at(m, g.h, a.lo, a.hi);
      }
    }
  }
  return {detail::clamp01(bel), detail::clamp01(pl)};
}

}  // namespace esf
