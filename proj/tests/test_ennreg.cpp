#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "esf/ennreg.hpp"
#include "esf/rng.hpp"

using namespace esf;

namespace {

UnimodalModel random_model(std::size_t k, std::size_t d, Rng& rng,
                           const std::string& name = "m") {
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

}  // namespace

TEST_CASE("activations: unity at the prototype and for zero scale") {
  Rng rng(3);
  UnimodalModel m = random_model(3, 2, rng);
  std::vector<double> x(m.prototypes.row(0).begin(), m.prototypes.row(0).end());
  CHECK(activations(m, x)[0] == 1.0);

  m.gammas.assign(m.k, 0.0);
  const std::vector<double> far{9.0, -7.0};
  for (double s : activations(m, far)) CHECK(s == 1.0);
}

TEST_CASE("activations: match a scalar re-implementation") {
  Rng rng(5);
  const UnimodalModel m = random_model(3, 2, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<double> x{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    const std::vector<double> s = activations(m, x);
    for (std::size_t i = 0; i < m.k; ++i) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < 2; ++j)
        d2 += (x[j] - m.prototypes(i, j)) * (x[j] - m.prototypes(i, j));
      const double want = std::exp(-m.gammas[i] * m.gammas[i] * d2);
      CHECK(s[i] == doctest::Approx(want).epsilon(1e-14));
    }
  }
}

TEST_CASE("activations: dimension mismatch is a domain error") {
  Rng rng(7);
  const UnimodalModel m = random_model(2, 3, rng);
  const std::vector<double> x{1.0, 2.0};
  CHECK_THROWS_AS(activations(m, x), DomainError);
}

TEST_CASE("forward: single prototype passes through") {
  Rng rng(9);
  const UnimodalModel m = random_model(1, 2, rng);
  const std::vector<double> x{0.4, -1.2};
  const Grfn g = forward(m, x);
  const double s = activations(m, x)[0];
  const double mu = m.betas(0, 0) * x[0] + m.betas(0, 1) * x[1] + m.beta0s[0];
  CHECK(g.mu == doctest::Approx(mu).epsilon(1e-14));
  CHECK(g.sigma2 == m.sigma2_at(0));
  CHECK(g.h == doctest::Approx(s * m.h_at(0)).epsilon(1e-14));
}

TEST_CASE("forward: equidistant symmetric prototypes average the locations") {
  UnimodalModel m;
  m.name = "sym";
  m.k = 2;
  m.d = 1;
  m.prototypes = Matrix(2, 1);
  m.prototypes(0, 0) = -1.0;
  m.prototypes(1, 0) = 1.0;
  m.gammas = {0.8, 0.8};
  m.betas = Matrix(2, 1);
  m.betas(0, 0) = 0.5;
  m.betas(1, 0) = -0.25;
  m.beta0s = {1.0, 3.0};
  m.raw_sigma2s = {num::softplus_inv(1.0), num::softplus_inv(1.0)};
  m.raw_hs = {num::softplus_inv(2.0), num::softplus_inv(2.0)};
  const std::vector<double> x{0.0};
  const Grfn g = forward(m, x);
  const double mu0 = 1.0, mu1 = 3.0;
  CHECK(g.mu == doctest::Approx(0.5 * (mu0 + mu1)).epsilon(1e-14));
}

TEST_CASE("forward: matches explicit prototype GRFNs combined directly") {
  Rng rng(11);
  const UnimodalModel m = random_model(5, 3, rng);
  for (int trial = 0; trial < 25; ++trial) {
    const std::vector<double> x{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                                rng.uniform(-2.0, 2.0)};
    const Grfn got = forward(m, x);

    const std::vector<double> s = activations(m, x);
    std::vector<Grfn> parts;
    for (std::size_t i = 0; i < m.k; ++i) {
      double mu = m.beta0s[i];
      for (std::size_t j = 0; j < m.d; ++j) mu += m.betas(i, j) * x[j];
      parts.push_back({mu, m.sigma2_at(i), m.h_at(i)});
    }
    const Grfn want = combine(parts, s);
    CHECK(got.mu == doctest::Approx(want.mu).epsilon(1e-12));
    CHECK(got.sigma2 == doctest::Approx(want.sigma2).epsilon(1e-12));
    CHECK(got.h == doctest::Approx(want.h).epsilon(1e-12));
  }
}

TEST_CASE("forward: output precision is the exact activation-weighted sum") {
  Rng rng(13);
  const UnimodalModel m = random_model(4, 2, rng);
  const std::vector<double> x{0.3, 0.9};
  const Grfn g = forward(m, x);
  const std::vector<double> s = activations(m, x);
  double want = 0.0;
  for (std::size_t i = 0; i < m.k; ++i) want += s[i] * m.h_at(i);
  CHECK(g.h == want);
}

TEST_CASE("forward: precision decays far from every prototype") {
  Rng rng(15);
  const UnimodalModel m = random_model(4, 2, rng);
  const std::vector<double> near{0.0, 0.0};
  const std::vector<double> far{40.0, -40.0};
  CHECK(forward(m, far).h < 1e-3 * forward(m, near).h);
}

TEST_CASE("forward: small input perturbations move the output smoothly") {
  Rng rng(17);
  const UnimodalModel m = random_model(4, 2, rng);
  Rng jitter(18);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<double> x{jitter.uniform(-1.5, 1.5),
                                jitter.uniform(-1.5, 1.5)};
    const double delta = 1e-6;
    const std::vector<double> x2{x[0] + delta * jitter.uniform(-1.0, 1.0),
                                 x[1] + delta * jitter.uniform(-1.0, 1.0)};
    const Grfn a = forward(m, x);
    const Grfn b = forward(m, x2);
    CHECK(std::abs(a.mu - b.mu) < 1e-3);
    CHECK(std::abs(a.sigma2 - b.sigma2) < 1e-3);
    CHECK(std::abs(a.h - b.h) < 1e-3);
  }
}

TEST_CASE("init: n == K pins every prototype to a data row") {
  Matrix x(4, 2);
  const double rows[4][2] = {{0, 0}, {1, 0}, {0, 1}, {3, 3}};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 2; ++j) x(i, j) = rows[i][j];
  const std::vector<double> y{0.5, 1.0, 1.5, 2.0};
  const UnimodalModel m = init_unimodal(x, y, 4, 42, "tab");
  for (std::size_t c = 0; c < 4; ++c) {
    bool matched = false;
    for (std::size_t i = 0; i < 4; ++i)
      matched |= m.prototypes(c, 0) == x(i, 0) && m.prototypes(c, 1) == x(i, 1);
    CHECK(matched);
  }
  CHECK(m.beta0s[0] == doctest::Approx(num::mean(y)));
  CHECK(m.sigma2_at(0) == doctest::Approx(num::variance(y)).epsilon(1e-9));
  CHECK(m.h_at(0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("init: duplicate rows still fill K distinct slots via jitter") {
  Matrix x(8, 2);
  for (std::size_t i = 0; i < 8; ++i) {
    x(i, 0) = i < 4 ? 1.0 : -1.0;
    x(i, 1) = i < 4 ? 2.0 : -2.0;
  }
  const std::vector<double> y{1, 2, 1, 2, 1, 2, 1, 2};
  const UnimodalModel m = init_unimodal(x, y, 4, 7, "tab");
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = a + 1; b < 4; ++b) {
      const bool same = m.prototypes(a, 0) == m.prototypes(b, 0) &&
                        m.prototypes(a, 1) == m.prototypes(b, 1);
      CHECK_FALSE(same);
    }
}

TEST_CASE("init: fixed seed reproduces byte-identical parameters") {
  Rng rng(19);
  Matrix x(30, 3);
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = 0; j < 3; ++j) x(i, j) = rng.normal();
  std::vector<double> y(30);
  for (auto& v : y) v = rng.normal();
  const UnimodalModel a = init_unimodal(x, y, 6, 123, "tab");
  const UnimodalModel b = init_unimodal(x, y, 6, 123, "tab");
  CHECK(a.prototypes.a == b.prototypes.a);
  CHECK(a.gammas == b.gammas);
  CHECK(a.betas.a == b.betas.a);
  CHECK(a.beta0s == b.beta0s);
  CHECK(a.raw_sigma2s == b.raw_sigma2s);
  CHECK(a.raw_hs == b.raw_hs);
}

TEST_CASE("init: K > n is a domain error") {
  Matrix x(3, 2);
  const std::vector<double> y{1, 2, 3};
  CHECK_THROWS_AS(init_unimodal(x, y, 4, 0, "tab"), DomainError);
}

TEST_CASE("init: mean activation near one half at the fitted scale") {
  Rng rng(23);
  Matrix x(200, 2);
  for (std::size_t i = 0; i < 200; ++i)
    for (std::size_t j = 0; j < 2; ++j) x(i, j) = rng.normal();
  std::vector<double> y(200);
  for (auto& v : y) v = rng.normal();
  const UnimodalModel m = init_unimodal(x, y, 5, 9, "tab");
  for (std::size_t c = 0; c < m.k; ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < 200; ++i) acc += activations(m, x.row(i))[c];
    acc /= 200.0;
    CHECK(acc > 0.3);
    CHECK(acc < 0.7);
  }
}
