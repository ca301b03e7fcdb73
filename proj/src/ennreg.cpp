#include "esf/ennreg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "esf/rng.hpp"

namespace esf {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

// Lloyd's algorithm with k-means++ seeding. Returns k centroids; duplicate
// input rows can collapse centroids, the caller jitters those apart.
Matrix kmeans(const Matrix& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows;
  Matrix centers(k, x.cols);

  // Seeding proportional to squared distance to the nearest chosen center;
  // when every candidate sits on a chosen center, pick uniformly.
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = static_cast<std::size_t>(rng.below(n));
  for (std::size_t j = 0; j < x.cols; ++j) centers(0, j) = x(first, j);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(x.row(i), centers.row(c - 1)));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng.below(n));
    }
    for (std::size_t j = 0; j < x.cols; ++j) centers(c, j) = x(pick, j);
  }

  std::vector<std::size_t> assign(n, 0);
  for (int iter = 0; iter < 50; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_c = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = sq_dist(x.row(i), centers.row(c));
        if (d < best) {
          best = d;
          best_c = c;
        }
      }
      if (assign[i] != best_c) {
        assign[i] = best_c;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;
    Matrix sums(k, x.cols);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[assign[i]];
      for (std::size_t j = 0; j < x.cols; ++j) sums(assign[i], j) += x(i, j);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (std::size_t j = 0; j < x.cols; ++j)
        centers(c, j) = sums(c, j) / static_cast<double>(counts[c]);
    }
  }
  return centers;
}

}  // namespace

std::vector<double> activations(const UnimodalModel& m,
                                std::span<const double> x) {
  if (x.size() != m.d)
    throw DomainError("activations: input dimension mismatch for modality " +
                      m.name);
  std::vector<double> s(m.k);
  for (std::size_t i = 0; i < m.k; ++i) {
    const double g2 = m.gammas[i] * m.gammas[i];
    s[i] = num::exp_clamped(-g2 * sq_dist(x, m.prototypes.row(i)));
  }
  return s;
}

Grfn forward(const UnimodalModel& m, std::span<const double> x, UniTape* tape) {
  if (x.size() != m.d)
    throw DomainError("forward: input dimension mismatch for modality " +
                      m.name);
  std::vector<double> dist2(m.k), s(m.k), mu_k(m.k), h_eff(m.k);
  for (std::size_t i = 0; i < m.k; ++i) {
    dist2[i] = sq_dist(x, m.prototypes.row(i));
    const double g2 = m.gammas[i] * m.gammas[i];
    s[i] = num::exp_clamped(-g2 * dist2[i]);
    double mu = m.beta0s[i];
    const auto beta = m.betas.row(i);
    for (std::size_t j = 0; j < m.d; ++j) mu += beta[j] * x[j];
    mu_k[i] = mu;
    h_eff[i] = s[i] * m.h_at(i);
  }
  const Grfn out = detail::combine_terms(
      m.k, [&](std::size_t i) { return mu_k[i]; },
      [&](std::size_t i) { return m.sigma2_at(i); },
      [&](std::size_t i) { return h_eff[i]; });
  if (tape) {
    tape->dist2 = std::move(dist2);
    tape->s = std::move(s);
    tape->mu_k = std::move(mu_k);
    tape->h_eff = std::move(h_eff);
    tape->out = out;
  }
  return out;
}

UnimodalModel init_unimodal(const Matrix& features,
                            std::span<const double> times_transformed,
                            std::size_t k, std::uint64_t seed,
                            std::string name) {
  const std::size_t n = features.rows;
  if (k < 1 || k > n)
    throw DomainError("init_unimodal: need 1 <= K <= n for modality " + name);
  if (times_transformed.size() != n)
    throw DomainError("init_unimodal: time/feature row mismatch");

  UnimodalModel m;
  m.name = std::move(name);
  m.d = features.cols;
  m.k = k;

  Rng rng(seed);
  m.prototypes = kmeans(features, k, rng);

  // Collapsed centroids get a small deterministic jitter so all K slots stay
  // distinct.
  for (std::size_t a = 1; a < k; ++a) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (std::size_t b = 0; b < a; ++b) {
        if (sq_dist(m.prototypes.row(a), m.prototypes.row(b)) == 0.0) {
          for (std::size_t j = 0; j < m.d; ++j)
            m.prototypes(a, j) += 1e-6 * rng.uniform(-1.0, 1.0);
          moved = true;
        }
      }
    }
  }

  m.gammas.assign(k, 1.0);
  for (std::size_t c = 0; c < k; ++c) {
    double msd = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      msd += sq_dist(features.row(i), m.prototypes.row(c));
    msd /= static_cast<double>(n);
    // gamma^2 = ln 2 / msd puts the mean activation near one half.
    m.gammas[c] = msd > 1e-12 ? std::sqrt(std::log(2.0) / msd) : 1.0;
  }

  const double y_mean = num::mean(times_transformed);
  const double y_var = std::max(num::variance(times_transformed), 1e-8);
  m.betas = Matrix(k, m.d);
  m.beta0s.assign(k, y_mean);
  m.raw_sigma2s.assign(k, num::softplus_inv(y_var));
  m.raw_hs.assign(k, num::softplus_inv(1.0));
  return m;
}

}  // namespace esf
