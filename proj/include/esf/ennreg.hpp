#pragma once

#include <span>
#include <string>
#include <vector>

#include "esf/common.hpp"
#include "esf/grfn.hpp"

namespace esf {

// One modality's evidential regression network. Each prototype p_k carries a
// radial activation s_k(x) = exp(-gamma_k^2 ||x - p_k||^2), an affine
// location map mu_k(x) = beta_k . x + beta0_k and a GRFN (mu_k(x), sigma2_k,
// s_k(x) h_k); the K prototype GRFNs combine into one output GRFN.
// sigma2_k and h_k are stored through softplus so the raw parameters stay
// unconstrained.
struct UnimodalModel {
  std::string name;
  std::size_t d = 0;
  std::size_t k = 0;
  Matrix prototypes;               // k x d
  std::vector<double> gammas;      // k
  Matrix betas;                    // k x d
  std::vector<double> beta0s;      // k
  std::vector<double> raw_sigma2s; // k
  std::vector<double> raw_hs;      // k

  double sigma2_at(std::size_t i) const { return num::softplus(raw_sigma2s[i]); }
  double h_at(std::size_t i) const { return num::softplus(raw_hs[i]); }
};

std::vector<double> activations(const UnimodalModel& m,
                                std::span<const double> x);

// Intermediates recorded by the taped forward pass for backpropagation.
struct UniTape {
  std::vector<double> dist2;  // ||x - p_k||^2
  std::vector<double> s;      // activations
  std::vector<double> mu_k;   // affine locations
  std::vector<double> h_eff;  // s_k * h_k
  Grfn out;
};

Grfn forward(const UnimodalModel& m, std::span<const double> x,
             UniTape* tape = nullptr);

// k-means prototypes (k-means++ seeding, Lloyd), gamma set for mean
// activation 1/2, beta zero, intercept and variance from the transformed
// times, h = 1.
UnimodalModel init_unimodal(const Matrix& features,
                            std::span<const double> times_transformed,
                            std::size_t k, std::uint64_t seed,
                            std::string name);

}  // namespace esf
