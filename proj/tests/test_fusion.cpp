#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "esf/fusion.hpp"
#include "esf/rng.hpp"

using namespace esf;

namespace {

UnimodalModel random_model(std::size_t k, std::size_t d, Rng& rng,
                           const std::string& name) {
  UnimodalModel m;
  m.name = name;
  m.k = k;
  m.d = d;
  m.prototypes = Matrix(k, d);
  m.betas = Matrix(k, d);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      m.prototypes(i, j) = rng.uniform(-2.0, 2.0);
      m.betas(i, j) = rng.uniform(-0.5, 0.5);
    }
  m.gammas.resize(k);
  m.beta0s.resize(k);
  m.raw_sigma2s.resize(k);
  m.raw_hs.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    m.gammas[i] = rng.uniform(0.3, 1.2);
    m.beta0s[i] = rng.uniform(-1.0, 1.0);
    m.raw_sigma2s[i] = num::softplus_inv(rng.uniform(0.2, 2.0));
    m.raw_hs[i] = num::softplus_inv(rng.uniform(0.5, 3.0));
  }
  return m;
}

MultimodalModel random_multimodal(std::size_t t, Rng& rng) {
  MultimodalModel mm;
  for (std::size_t i = 0; i < t; ++i)
    mm.modalities.push_back(random_model(3, 2, rng, "m" + std::to_string(i)));
  mm.reliab_raw.resize(t);
  for (auto& r : mm.reliab_raw) r = rng.uniform(-1.5, 1.5);
  mm.transform = TimeTransform{1.0, 0, 1.0};
  return mm;
}

std::vector<std::vector<double>> random_inputs(const MultimodalModel& mm,
                                               Rng& rng) {
  std::vector<std::vector<double>> xs;
  for (const auto& m : mm.modalities) {
    std::vector<double> x(m.d);
    for (auto& v : x) v = rng.uniform(-2.0, 2.0);
    xs.push_back(std::move(x));
  }
  return xs;
}

FeatureViews views(const std::vector<std::vector<double>>& xs) {
  FeatureViews v;
  for (const auto& x : xs) v.emplace_back(x);
  return v;
}

}  // namespace

TEST_CASE("reliabilities: logistic of the raw scores") {
  MultimodalModel mm;
  mm.reliab_raw = {0.0, 20.0, -20.0};
  const std::vector<double> r = mm.reliabilities();
  CHECK(r[0] == 0.5);
  CHECK(std::abs(r[1] - 1.0) < 1e-8);
  CHECK(std::abs(r[2]) < 1e-8);
}

TEST_CASE("fuse: single modality with unit reliability is the forward output") {
  Rng rng(31);
  MultimodalModel mm = random_multimodal(1, rng);
  mm.reliab_raw = {40.0};  // logistic(40) rounds to exactly 1
  const auto xs = random_inputs(mm, rng);
  const FusionOutput f = fuse(mm, views(xs));
  const Grfn g = forward(mm.modalities[0], xs[0]);
  CHECK(f.fused.mu == g.mu);
  CHECK(f.fused.sigma2 == g.sigma2);
  CHECK(f.fused.h == g.h);
  CHECK(f.reliabilities[0] == 1.0);
}

TEST_CASE("fuse: a zero-reliability modality drops out") {
  Rng rng(33);
  MultimodalModel mm = random_multimodal(2, rng);
  mm.reliab_raw = {0.7, -800.0};  // logistic(-800) underflows to exactly 0
  const auto xs = random_inputs(mm, rng);
  const FusionOutput f = fuse(mm, views(xs));
  const Grfn g1 = forward(mm.modalities[0], xs[0]);
  const double r1 = num::sigmoid(0.7);
  CHECK(f.reliabilities[1] == 0.0);
  CHECK(f.fused.mu == g1.mu);
  CHECK(f.fused.sigma2 == g1.sigma2);
  CHECK(f.fused.h == r1 * g1.h);
}

TEST_CASE("fuse: equals combining the discounted GRFNs with unit weights") {
  Rng rng(35);
  for (int trial = 0; trial < 20; ++trial) {
    MultimodalModel mm = random_multimodal(3, rng);
    const auto xs = random_inputs(mm, rng);
    const FusionOutput f = fuse(mm, views(xs));
    const std::vector<double> ones(3, 1.0);
    const Grfn alt = combine(f.discounted, ones);
    CHECK(f.fused.mu == doctest::Approx(alt.mu).epsilon(1e-12));
    CHECK(f.fused.sigma2 == doctest::Approx(alt.sigma2).epsilon(1e-12));
    CHECK(f.fused.h == doctest::Approx(alt.h).epsilon(1e-12));

    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(f.discounted[i].h == f.reliabilities[i] * f.per_modality[i].h);
      CHECK(f.discounted[i].mu == f.per_modality[i].mu);
    }
  }
}

TEST_CASE("fuse: scaling every precision by a constant keeps mu_f") {
  Rng rng(37);
  MultimodalModel mm = random_multimodal(2, rng);
  const auto xs = random_inputs(mm, rng);
  const FusionOutput base = fuse(mm, views(xs));

  MultimodalModel scaled = mm;
  for (auto& m : scaled.modalities)
    for (auto& rh : m.raw_hs) rh = num::softplus_inv(4.0 * num::softplus(rh));
  const FusionOutput f = fuse(scaled, views(xs));
  CHECK(f.fused.mu == doctest::Approx(base.fused.mu).epsilon(1e-9));
}

TEST_CASE("fuse: discounting never raises the total precision") {
  Rng rng(39);
  for (int trial = 0; trial < 10; ++trial) {
    MultimodalModel mm = random_multimodal(3, rng);
    const auto xs = random_inputs(mm, rng);
    const FusionOutput f = fuse(mm, views(xs));
    double h_sum = 0.0;
    for (const auto& g : f.per_modality) h_sum += g.h;
    CHECK(f.fused.h <= h_sum + 1e-12);

    MultimodalModel full = mm;
    full.reliab_raw.assign(3, 40.0);
    const FusionOutput g = fuse(full, views(xs));
    double h_sum2 = 0.0;
    for (const auto& u : g.per_modality) h_sum2 += u.h;
    CHECK(g.fused.h == doctest::Approx(h_sum2).epsilon(1e-12));
  }
}

TEST_CASE("fuse: wrong modality count is a domain error") {
  Rng rng(41);
  MultimodalModel mm = random_multimodal(2, rng);
  const auto xs = random_inputs(mm, rng);
  FeatureViews v = views(xs);
  v.pop_back();
  CHECK_THROWS_AS(fuse(mm, v), DomainError);
}

TEST_CASE("predict: identity transform maps mu_f = 0 to time 1") {
  Rng rng(43);
  MultimodalModel mm = random_multimodal(1, rng);
  mm.transform = TimeTransform{1.0, 0, 1.0};
  // Force mu_f = 0 via a single-prototype model with zero slopes.
  mm.modalities[0].betas = Matrix(mm.modalities[0].k, mm.modalities[0].d);
  for (auto& b : mm.modalities[0].beta0s) b = 0.0;
  const auto xs = random_inputs(mm, rng);
  const Prediction p = predict(mm, views(xs));
  CHECK(p.fused.mu == 0.0);
  CHECK(p.time == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("predict: recovers the time whose transform is mu_f") {
  Rng rng(45);
  MultimodalModel mm = random_multimodal(1, rng);
  mm.transform = TimeTransform{0.37, 0, 1.0};
  const double t_star = 7.25;
  const double y_star = forward(mm.transform, t_star);
  mm.modalities[0].betas = Matrix(mm.modalities[0].k, mm.modalities[0].d);
  for (auto& b : mm.modalities[0].beta0s) b = y_star;
  const auto xs = random_inputs(mm, rng);
  const Prediction p = predict(mm, views(xs));
  CHECK(p.time == doctest::Approx(t_star).epsilon(1e-6));
}

TEST_CASE("predict: finite positive times over random inputs") {
  Rng rng(47);
  MultimodalModel mm = random_multimodal(2, rng);
  mm.transform = TimeTransform{0.8, 0, 1.0};
  for (int trial = 0; trial < 50; ++trial) {
    const auto xs = random_inputs(mm, rng);
    const Prediction p = predict(mm, views(xs));
    CHECK(std::isfinite(p.time));
    CHECK(p.time > 0.0);
  }
}
