#pragma once

#include <span>

#include "esf/common.hpp"

namespace esf {

// Observation transform y = YJ_lambda(log t): a log followed by a
// maximum-likelihood Yeo-Johnson power transform, with exact inverse.
struct TimeTransform {
  double yj_lambda = 1.0;
  std::int64_t fitted_on_n = 0;
  double y_std = 0.0;  // std of the transformed fit sample, used for epsilon
};

// Raw Yeo-Johnson map and inverse on the already-logged axis.
double yj_apply(double lambda, double x);
double yj_invert(double lambda, double y);

// Gaussian profile log-likelihood of the YJ transform on a logged sample
// (additive constants dropped). Exposed so the fitted lambda can be checked
// for stationarity.
double yj_profile_loglik(double lambda, std::span<const double> xs);

// Fits lambda by golden-section search over [-5, 5] on log(times).
TimeTransform fit_time_transform(std::span<const double> times);

double forward(const TimeTransform& tt, double t);
double inverse(const TimeTransform& tt, double y);

}  // namespace esf
