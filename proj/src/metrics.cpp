#include "esf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace esf {

double km_eval(const SurvivalCurve& c, double t) {
  double s = 1.0;
  for (std::size_t i = 0; i < c.times.size() && c.times[i] <= t; ++i)
    s = c.surv[i];
  return s;
}

double km_eval_left(const SurvivalCurve& c, double t) {
  double s = 1.0;
  for (std::size_t i = 0; i < c.times.size() && c.times[i] < t; ++i)
    s = c.surv[i];
  return s;
}

double surv_prob(const Grfn& g, double y) {
  return plausibility(g, RealInterval::at_least(y));
}

SurvivalCurve survival_curve_grfn(const Grfn& g, const TimeTransform& tt,
                                  std::span<const double> grid) {
  SurvivalCurve c;
  c.times.assign(grid.begin(), grid.end());
  for (std::size_t i = 1; i < c.times.size(); ++i)
    if (!(c.times[i] > c.times[i - 1]))
      throw DomainError("survival_curve: grid must be strictly increasing");
  c.surv.reserve(grid.size());
  double running = 1.0;
  for (double t : grid) {
    const double s = surv_prob(g, forward(tt, t));
    running = std::min(running, s);  // guards floating-point edges
    c.surv.push_back(running);
  }
  return c;
}

SurvivalCurve survival_curve(const MultimodalModel& mm, const FeatureViews& xs,
                             std::span<const double> grid) {
  return survival_curve_grfn(fuse(mm, xs).fused, mm.transform, grid);
}

double c_index_antolini(const Matrix& s_at, std::span<const double> time,
                        std::span<const int> event) {
  const std::size_t n = time.size();
  if (s_at.rows != n || s_at.cols != n || event.size() != n)
    throw DomainError("c_index: shape mismatch");
  double pairs = 0.0, conc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (event[i] != 1) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (!(time[i] < time[j])) continue;
      pairs += 1.0;
      const double si = s_at(i, i);
      const double sj = s_at(j, i);
      if (si < sj)
        conc += 1.0;
      else if (si == sj)
        conc += 0.5;
    }
  }
  if (pairs < 2.0) throw NumericError("c_index: fewer than 2 comparable pairs");
  return conc / pairs;
}

double c_index_harrell(std::span<const double> risk,
                       std::span<const double> time,
                       std::span<const int> event) {
  const std::size_t n = time.size();
  if (risk.size() != n || event.size() != n)
    throw DomainError("c_index: shape mismatch");
  double pairs = 0.0, conc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (event[i] != 1) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (!(time[i] < time[j])) continue;
      pairs += 1.0;
      if (risk[i] > risk[j])
        conc += 1.0;
      else if (risk[i] == risk[j])
        conc += 0.5;
    }
  }
  if (pairs < 2.0) throw NumericError("c_index: fewer than 2 comparable pairs");
  return conc / pairs;
}

SurvivalCurve kaplan_meier(std::span<const double> times,
                           std::span<const int> events) {
  const std::size_t n = times.size();
  if (n == 0) throw DomainError("kaplan_meier: empty cohort");
  if (events.size() != n) throw DomainError("kaplan_meier: size mismatch");

  // deaths and at-risk counts per distinct time; censored subjects at a tied
  // time stay in the risk set for that time's deaths.
  std::map<double, std::size_t> deaths;
  for (std::size_t i = 0; i < n; ++i)
    if (events[i] == 1) ++deaths[times[i]];

  SurvivalCurve c;
  double s = 1.0;
  for (const auto& [t, d] : deaths) {
    std::size_t at_risk = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (times[i] >= t) ++at_risk;
    s *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
    c.times.push_back(t);
    c.surv.push_back(s);
  }
  return c;
}

namespace {

struct IpcwWeights {
  std::vector<double> w_event;  // G(T_i-) per sample
  SurvivalCurve censor_km;
};

IpcwWeights censoring_weights(std::span<const double> time,
                              std::span<const int> event) {
  std::vector<int> flipped(event.size());
  for (std::size_t i = 0; i < event.size(); ++i) flipped[i] = 1 - event[i];
  IpcwWeights w;
  w.censor_km = kaplan_meier(time, flipped);
  w.w_event.resize(time.size());
  for (std::size_t i = 0; i < time.size(); ++i)
    w.w_event[i] = km_eval_left(w.censor_km, time[i]);
  return w;
}

void check_grid(std::span<const double> grid) {
  if (grid.size() < 2) throw DomainError("ipcw: grid needs at least 2 points");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw DomainError("ipcw: grid must be strictly increasing");
}

void check_curves(const std::vector<SurvivalCurve>& curves,
                  std::span<const double> grid, std::size_t n) {
  if (curves.size() != n) throw DomainError("ipcw: curve count mismatch");
  for (const auto& c : curves)
    if (c.times.size() != grid.size())
      throw DomainError("ipcw: curves must be evaluated on the grid");
}

// Shared IPCW integration loop; term(s, is_event_branch) supplies the Brier
// or log-likelihood integrand for one sample at one grid time.
template <class Term>
double ipcw_integral(const std::vector<SurvivalCurve>& curves,
                     std::span<const double> time, std::span<const int> event,
                     std::span<const double> grid, IpcwDiag* diag,
                     Term term) {
  check_grid(grid);
  check_curves(curves, grid, time.size());
  const std::size_t n = time.size();
  const IpcwWeights w = censoring_weights(time, event);

  std::vector<double> pointwise(grid.size(), 0.0);
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    const double t = grid[gi];
    const double g_t = km_eval(w.censor_km, t);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = curves[i].surv[gi];
      if (time[i] <= t) {
        if (event[i] != 1) continue;  // censored before t contributes nothing
        if (w.w_event[i] <= 0.0) {
          if (diag) ++diag->dropped_terms;
          continue;
        }
        acc += term(s, true) / w.w_event[i];
      } else {
        if (g_t <= 0.0) {
          if (diag) ++diag->dropped_terms;
          continue;
        }
        acc += term(s, false) / g_t;
      }
    }
    pointwise[gi] = acc / static_cast<double>(n);
  }

  double integral = 0.0;
  for (std::size_t gi = 1; gi < grid.size(); ++gi)
    integral += 0.5 * (pointwise[gi] + pointwise[gi - 1]) *
                (grid[gi] - grid[gi - 1]);
  return integral / (grid.back() - grid.front());
}

}  // namespace

double ibs(const std::vector<SurvivalCurve>& curves,
           std::span<const double> time, std::span<const int> event,
           std::span<const double> grid, IpcwDiag* diag) {
  return ipcw_integral(curves, time, event, grid, diag,
                       [](double s, bool died) {
                         return died ? s * s : (1.0 - s) * (1.0 - s);
                       });
}

double ibll(const std::vector<SurvivalCurve>& curves,
            std::span<const double> time, std::span<const int> event,
            std::span<const double> grid, IpcwDiag* diag) {
  return ipcw_integral(curves, time, event, grid, diag,
                       [](double s, bool died) {
                         const double sc = std::clamp(s, 1e-7, 1.0 - 1e-7);
                         return died ? -std::log(1.0 - sc) : -std::log(sc);
                       });
}

LogrankResult logrank(std::span<const double> times_a,
                      std::span<const int> events_a,
                      std::span<const double> times_b,
                      std::span<const int> events_b) {
  if (times_a.empty() || times_b.empty())
    throw DomainError("logrank: both groups must be nonempty");

  std::map<double, std::pair<std::size_t, std::size_t>> deaths;  // (dA, dB)
  for (std::size_t i = 0; i < times_a.size(); ++i)
    if (events_a[i] == 1) ++deaths[times_a[i]].first;
  for (std::size_t i = 0; i < times_b.size(); ++i)
    if (events_b[i] == 1) ++deaths[times_b[i]].second;

  double o_minus_e = 0.0;
  double var = 0.0;
  for (const auto& [t, d_ab] : deaths) {
    double n_a = 0.0, n_b = 0.0;
    for (double ta : times_a)
      if (ta >= t) n_a += 1.0;
    for (double tb : times_b)
      if (tb >= t) n_b += 1.0;
    const double n_t = n_a + n_b;
    const double d = static_cast<double>(d_ab.first + d_ab.second);
    const double e_a = d * n_a / n_t;
    o_minus_e += static_cast<double>(d_ab.first) - e_a;
    if (n_t > 1.0)
      var += d * (n_t - d) * n_a * n_b / (n_t * n_t * (n_t - 1.0));
  }

  LogrankResult r;
  if (var <= 0.0) {
    r.zero_variance = true;
    r.chi2 = 0.0;
    r.p = 1.0;
    return r;
  }
  r.chi2 = o_minus_e * o_minus_e / var;
  // chi-square(1) upper tail: Q(1/2, x/2) = erfc(sqrt(x/2))
  r.p = std::erfc(std::sqrt(0.5 * r.chi2));
  return r;
}

std::vector<int> stratify_median(std::span<const double> risks) {
  if (risks.empty()) throw DomainError("stratify: empty cohort");
  std::vector<double> sorted(risks.begin(), risks.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 == 1
                            ? sorted[n / 2]
                            : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = risks[i] > median ? 1 : 0;
  return labels;
}

std::vector<double> quantile_grid(std::span<const double> times,
                                  std::size_t n_points, double lo_q,
                                  double hi_q) {
  if (times.size() < 2 || n_points < 2)
    throw DomainError("quantile_grid: need at least 2 times and 2 points");
  if (!(lo_q >= 0.0 && lo_q < hi_q && hi_q <= 1.0))
    throw DomainError("quantile_grid: bad quantile range");
  std::vector<double> sorted(times.begin(), times.end());
  std::sort(sorted.begin(), sorted.end());
  const double m = static_cast<double>(sorted.size() - 1);
  std::vector<double> grid;
  for (std::size_t i = 0; i < n_points; ++i) {
    const double q =
        lo_q + (hi_q - lo_q) * static_cast<double>(i) /
                   static_cast<double>(n_points - 1);
    const double pos = q * m;
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    const double v = lo + 1 < sorted.size()
                         ? sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
                         : sorted[lo];
    if (grid.empty() || v > grid.back()) grid.push_back(v);
  }
  if (grid.size() < 2)
    throw NumericError("quantile_grid: degenerate time distribution");
  return grid;
}

}  // namespace esf
