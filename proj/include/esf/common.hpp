#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace esf {

// Error taxonomy. The CLI maps these onto exit codes: config/schema = 2,
// data = 3, numeric = 4, I/O = 5. DomainError marks a violated precondition
// of an in-process API call and surfaces as a numeric failure at the CLI.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense row-major matrix of doubles, enough for desk-scale cohorts.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(a.data() + i * cols, cols);
  }
  std::span<double> row(std::size_t i) {
    return std::span<double>(a.data() + i * cols, cols);
  }
};

namespace num {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kSqrt2Pi = 2.50662827463100050242;

// exp with the argument floored at -745 so ratios of underflowed terms stay
// well defined.
inline double exp_clamped(double t) { return std::exp(t < -745.0 ? -745.0 : t); }

// Standard normal CDF via erfc; stable in both tails.
inline double Phi(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

inline double phi_pdf(double z) { return kInvSqrt2Pi * exp_clamped(-0.5 * z * z); }

inline double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// Inverse of softplus for y > 0.
inline double softplus_inv(double y) {
  if (y <= 0.0) throw DomainError("softplus_inv: argument must be positive");
  return y > 30.0 ? y : std::log(std::expm1(y));
}

inline double sigmoid(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Population variance (divides by n).
inline double variance(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

// Standard normal quantile (Acklam's rational approximation plus one Halley
// refinement step); good to ~1e-15 on (0,1).
double probit(double p);

}  // namespace num

std::uint64_t fnv1a64(std::string_view s);
std::string to_hex(std::uint64_t x);

// Fixed "%.*g" formatting used by all text reports so identical numbers
// serialize to identical bytes.
inline std::string fmt_g(double x, int precision = 9) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, x);
  return std::string(buf);
}

}  // namespace esf
