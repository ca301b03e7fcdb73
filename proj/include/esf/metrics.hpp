#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "esf/fusion.hpp"
#include "esf/training.hpp"

namespace esf {

struct SurvivalCurve {
  std::vector<double> times;  // strictly increasing
  std::vector<double> surv;   // non-increasing, in [0, 1]
};

// Right-continuous step evaluation (Kaplan-Meier convention) and the left
// limit S(t-).
double km_eval(const SurvivalCurve& c, double t);
double km_eval_left(const SurvivalCurve& c, double t);

// Plausibility that the subject survives past y (transformed units).
double surv_prob(const Grfn& g, double y);

// S(t|x) = Pl([forward(t), inf)) of the fused GRFN, forced non-increasing by
// a running minimum. survival_curve_grfn is the single-GRFN core.
SurvivalCurve survival_curve_grfn(const Grfn& g, const TimeTransform& tt,
                                  std::span<const double> grid);
SurvivalCurve survival_curve(const MultimodalModel& mm, const FeatureViews& xs,
                             std::span<const double> grid);

// Antolini's time-dependent concordance. s_at(j, i) = S(t_i | x_j).
double c_index_antolini(const Matrix& s_at, std::span<const double> time,
                        std::span<const int> event);

// Harrell's concordance on scalar risks (higher risk = earlier event).
double c_index_harrell(std::span<const double> risk,
                       std::span<const double> time,
                       std::span<const int> event);

struct IpcwDiag {
  std::size_t dropped_terms = 0;  // weights with G = 0
};

// Graf's IPCW integrated Brier score over the grid (trapezoid, normalized by
// the grid span); curves must share the grid as their time axis.
double ibs(const std::vector<SurvivalCurve>& curves,
           std::span<const double> time, std::span<const int> event,
           std::span<const double> grid, IpcwDiag* diag = nullptr);

// Integrated binomial log-likelihood (negated, lower is better); survival
// values clamp to [1e-7, 1 - 1e-7] before the logs.
double ibll(const std::vector<SurvivalCurve>& curves,
            std::span<const double> time, std::span<const int> event,
            std::span<const double> grid, IpcwDiag* diag = nullptr);

// Product-limit estimator; ties resolve deaths before censorings.
SurvivalCurve kaplan_meier(std::span<const double> times,
                           std::span<const int> events);

struct LogrankResult {
  double chi2 = 0.0;
  double p = 1.0;
  bool zero_variance = false;
};

LogrankResult logrank(std::span<const double> times_a,
                      std::span<const int> events_a,
                      std::span<const double> times_b,
                      std::span<const int> events_b);

// 1 = high risk (above the median), 0 = low risk.
std::vector<int> stratify_median(std::span<const double> risks);

// Equally spaced quantiles of the observed times on [lo_q, hi_q],
// deduplicated to a strictly increasing grid.
std::vector<double> quantile_grid(std::span<const double> times,
                                  std::size_t n_points, double lo_q,
                                  double hi_q);

struct EvalReport {
  double c_index = 0.0;          // Antolini, the headline value
  double harrell_c_index = 0.0;  // risk = -mu_f, for baseline comparability
  double ibs = 0.0;
  double ibll = 0.0;
  double logrank_chi2 = 0.0;
  double logrank_p = 1.0;
  bool logrank_zero_variance = false;
  std::vector<std::pair<std::string, double>> reliabilities;
  std::size_t n_test = 0;
  std::size_t ipcw_dropped = 0;
};

}  // namespace esf
