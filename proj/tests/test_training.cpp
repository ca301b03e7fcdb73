#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "esf/rng.hpp"
#include "esf/training.hpp"

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
      m.prototypes(i, j) = rng.uniform(-1.5, 1.5);
      m.betas(i, j) = rng.uniform(-0.4, 0.4);
    }
  m.gammas.resize(k);
  m.beta0s.resize(k);
  m.raw_sigma2s.resize(k);
  m.raw_hs.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    m.gammas[i] = rng.uniform(0.4, 1.0);
    m.beta0s[i] = rng.uniform(-0.8, 0.8);
    m.raw_sigma2s[i] = num::softplus_inv(rng.uniform(0.3, 1.5));
    m.raw_hs[i] = num::softplus_inv(rng.uniform(0.5, 2.5));
  }
  return m;
}

MultimodalModel random_multimodal(std::size_t t, std::size_t k, std::size_t d,
                                  Rng& rng) {
  MultimodalModel mm;
  for (std::size_t i = 0; i < t; ++i)
    mm.modalities.push_back(random_model(k, d, rng, "m" + std::to_string(i)));
  mm.reliab_raw.resize(t);
  for (auto& r : mm.reliab_raw) r = rng.uniform(-0.8, 0.8);
  mm.transform = TimeTransform{1.0, 0, 1.0};
  return mm;
}

ModelInputs random_inputs(const MultimodalModel& mm, std::size_t n, Rng& rng) {
  ModelInputs in;
  for (const auto& m : mm.modalities) {
    Matrix x(n, m.d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m.d; ++j) x(i, j) = rng.uniform(-1.5, 1.5);
    in.x.push_back(std::move(x));
  }
  for (std::size_t i = 0; i < n; ++i)
    in.obs.push_back(Observation{rng.uniform(-1.0, 1.0), i % 2 == 0 ? 1 : 0});
  return in;
}

std::vector<std::size_t> iota_idx(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

}  // namespace

TEST_CASE("loss_interval: vacuous evidence under each branch weight") {
  const Grfn vac{0.0, 1.0, 0.0};
  const Observation censored{0.5, 0};
  LossConfig cfg;
  cfg.epsilon = 0.1;

  cfg.lambda = 0.0;  // only the plausibility term, Pl = 1
  CHECK(loss_interval(vac, censored, cfg) == 0.0);

  cfg.lambda = 1.0;  // only the belief term, Bel = 0 floored
  LossDiag diag;
  const double loss = loss_interval(vac, censored, cfg, &diag);
  CHECK(loss == doctest::Approx(-std::log(1e-300)));
  CHECK(std::isfinite(loss));
  CHECK(diag.clamp_events == 1);
  CHECK(diag.terms == 1);
}

TEST_CASE("loss_interval: matches the oracle-substituted expression") {
  Rng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    Grfn g{rng.uniform(-1.0, 1.0), rng.uniform(0.1, 2.0), rng.uniform(0.3, 4.0)};
    LossConfig cfg;
    cfg.lambda = rng.uniform(0.1, 0.9);
    cfg.epsilon = 0.5;
    const Observation obs{rng.uniform(-1.0, 1.0), trial % 2};
    const RealInterval a = obs.d == 1
                               ? RealInterval{obs.y - 0.5, obs.y + 0.5}
                               : RealInterval::at_least(obs.y);
    const BelPl o = oracle_bel_pl(g, a, 96);
    const double want =
        -cfg.lambda * std::log(o.bel) - (1.0 - cfg.lambda) * std::log(o.pl);
    CHECK(loss_interval(g, obs, cfg) == doctest::Approx(want).epsilon(1e-6));
  }
}

TEST_CASE("loss_interval: non-increasing in Bel and Pl") {
  const Observation obs{0.0, 1};
  LossConfig cfg;
  cfg.lambda = 0.5;
  cfg.epsilon = 0.3;
  const RealInterval a{-0.3, 0.3};
  Rng rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    Grfn g1{rng.uniform(0.5, 3.0), rng.uniform(0.1, 1.0), rng.uniform(0.5, 3.0)};
    Grfn g2 = g1;
    g2.mu = g1.mu * rng.uniform(0.0, 1.0);  // closer to the interval center
    const BelPl b1 = bel_pl(g1, a);
    const BelPl b2 = bel_pl(g2, a);
    if (b2.bel >= b1.bel && b2.pl >= b1.pl) {
      CHECK(loss_interval(g2, obs, cfg) <= loss_interval(g1, obs, cfg) + 1e-12);
    }
  }
}

TEST_CASE("loss_interval: moving mu toward an uncensored y never hurts") {
  LossConfig cfg;
  cfg.lambda = 0.5;
  cfg.epsilon = 0.3;
  const Observation obs{0.7, 1};
  for (double sigma2 : {0.2, 1.0}) {
    for (double h : {0.5, 2.0}) {
      double prev = std::numeric_limits<double>::infinity();
      for (double mu = obs.y - 3.0; mu <= obs.y + 1e-9; mu += 0.05) {
        const double cur = loss_interval({mu, sigma2, h}, obs, cfg);
        CHECK(cur <= prev + 1e-12);
        prev = cur;
      }
    }
  }
}

TEST_CASE("loss_all: zero weights give zero loss") {
  Rng rng(7);
  MultimodalModel mm = random_multimodal(2, 3, 2, rng);
  ModelInputs in = random_inputs(mm, 6, rng);
  LossConfig cfg;
  cfg.epsilon = 0.2;
  cfg.eta = {0.0, 0.0};
  cfg.varphi = 0.0;
  const auto idx = iota_idx(6);
  CHECK(loss_all(mm, in, idx, cfg) == 0.0);
}

TEST_CASE("loss_all: single modality reduces to the mean unimodal loss") {
  Rng rng(9);
  MultimodalModel mm = random_multimodal(1, 3, 2, rng);
  ModelInputs in = random_inputs(mm, 8, rng);
  LossConfig cfg;
  cfg.epsilon = 0.2;
  cfg.eta = {1.0};
  cfg.varphi = 0.0;
  const auto idx = iota_idx(8);
  const double got = loss_all(mm, in, idx, cfg);

  double want = 0.0;
  const double r = num::sigmoid(mm.reliab_raw[0]);
  for (std::size_t i = 0; i < 8; ++i) {
    const Grfn g = forward(mm.modalities[0], in.x[0].row(i));
    want += loss_interval(discount(g, r), in.obs[i], cfg);
  }
  want /= 8.0;
  CHECK(got == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("loss_all: two-sample batch matches a hand-assembled total") {
  // Single-prototype modalities evaluated at their prototypes make every
  // piece analytic; Bel/Pl come from the quadrature oracle.
  MultimodalModel mm;
  for (int m = 0; m < 2; ++m) {
    UnimodalModel u;
    u.name = m == 0 ? "a" : "b";
    u.k = 1;
    u.d = 1;
    u.prototypes = Matrix(1, 1);
    u.prototypes(0, 0) = 0.0;
    u.gammas = {0.7};
    u.betas = Matrix(1, 1);
    u.betas(0, 0) = m == 0 ? 0.5 : -0.3;
    u.beta0s = {m == 0 ? 0.2 : -0.1};
    u.raw_sigma2s = {num::softplus_inv(m == 0 ? 0.8 : 0.5)};
    u.raw_hs = {num::softplus_inv(m == 0 ? 1.5 : 2.5)};
    mm.modalities.push_back(u);
  }
  mm.reliab_raw = {0.4, -0.6};
  mm.transform = TimeTransform{1.0, 0, 1.0};

  ModelInputs in;
  in.x.assign(2, Matrix(2, 1));
  in.x[0](0, 0) = 0.3;
  in.x[1](0, 0) = -0.2;
  in.x[0](1, 0) = -0.8;
  in.x[1](1, 0) = 0.6;
  in.obs = {{0.4, 1}, {-0.2, 0}};

  LossConfig cfg;
  cfg.lambda = 0.4;
  cfg.epsilon = 0.5;
  cfg.eta = {1.0, 0.5};
  cfg.varphi = 0.7;

  const double r0 = num::sigmoid(0.4);
  const double r1 = num::sigmoid(-0.6);
  double want = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    const double x0 = in.x[0](i, 0), x1 = in.x[1](i, 0);
    const double s0 = std::exp(-0.49 * x0 * x0);
    const double s1 = std::exp(-0.49 * x1 * x1);
    const Grfn g0{0.5 * x0 + 0.2, 0.8, s0 * 1.5};
    const Grfn g1{-0.3 * x1 - 0.1, 0.5, s1 * 2.5};
    const double rh0 = r0 * g0.h, rh1 = r1 * g1.h;
    const Grfn fused{(rh0 * g0.mu + rh1 * g1.mu) / (rh0 + rh1),
                     (rh0 * rh0 * g0.sigma2 + rh1 * rh1 * g1.sigma2) /
                         ((rh0 + rh1) * (rh0 + rh1)),
                     rh0 + rh1};
    const RealInterval a = in.obs[i].d == 1
                               ? RealInterval{in.obs[i].y - 0.5, in.obs[i].y + 0.5}
                               : RealInterval::at_least(in.obs[i].y);
    auto nll = [&](const Grfn& g) {
      const BelPl o = oracle_bel_pl(g, a, 128);
      return -0.4 * std::log(o.bel) - 0.6 * std::log(o.pl);
    };
    want += 1.0 * nll({g0.mu, g0.sigma2, r0 * g0.h});
    want += 0.5 * nll({g1.mu, g1.sigma2, r1 * g1.h});
    want += 0.7 * nll(fused);
  }
  want *= 0.5;

  const auto idx = iota_idx(2);
  CHECK(loss_all(mm, in, idx, cfg) == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("gradient: zero config weights give an all-zero gradient") {
  Rng rng(11);
  MultimodalModel mm = random_multimodal(2, 3, 2, rng);
  ModelInputs in = random_inputs(mm, 5, rng);
  LossConfig cfg;
  cfg.epsilon = 0.2;
  cfg.eta = {0.0, 0.0};
  cfg.varphi = 0.0;
  const auto idx = iota_idx(5);
  const GradResult g = gradient(mm, in, idx, cfg);
  CHECK(g.loss == 0.0);
  for (double v : g.grad) CHECK(v == 0.0);
}

TEST_CASE("gradient: matches central finite differences") {
  Rng rng(13);
  MultimodalModel mm = random_multimodal(2, 3, 2, rng);
  ModelInputs in = random_inputs(mm, 8, rng);
  LossConfig cfg;
  cfg.lambda = 0.4;
  cfg.epsilon = 0.25;
  cfg.eta = {1.0, 0.7};
  cfg.varphi = 0.5;
  const auto idx = iota_idx(8);

  const GradResult g = gradient(mm, in, idx, cfg);
  CHECK(g.loss == loss_all(mm, in, idx, cfg));

  std::vector<double> params = pack_params(mm);
  const double step = 1e-5;
  double worst = 0.0;
  for (std::size_t j = 0; j < params.size(); ++j) {
    MultimodalModel probe = mm;
    std::vector<double> p = params;
    p[j] = params[j] + step;
    unpack_params(probe, p);
    const double up = loss_all(probe, in, idx, cfg);
    p[j] = params[j] - step;
    unpack_params(probe, p);
    const double down = loss_all(probe, in, idx, cfg);
    const double fd = (up - down) / (2.0 * step);
    const double rel = std::abs(g.grad[j] - fd) /
                       std::max({std::abs(g.grad[j]), std::abs(fd), 1e-6});
    worst = std::max(worst, rel);
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("gradient: reliabilities get no gradient without loss weights") {
  Rng rng(17);
  MultimodalModel mm = random_multimodal(2, 3, 2, rng);
  ModelInputs in = random_inputs(mm, 5, rng);
  LossConfig cfg;
  cfg.epsilon = 0.2;
  cfg.eta = {0.0, 0.0};
  cfg.varphi = 0.0;
  const auto idx = iota_idx(5);
  const GradResult g = gradient(mm, in, idx, cfg);
  const ParamLayout l = ParamLayout::of(mm);
  CHECK(g.grad[l.reliab] == 0.0);
  CHECK(g.grad[l.reliab + 1] == 0.0);
}

namespace {

struct SmallProblem {
  MultimodalModel mm;
  ModelInputs train_in;
  ModelInputs val_in;
  TimeTransform tt;
};

// A synthetic two-modality problem prepared the same way the CLI does it.
SmallProblem make_problem(std::uint64_t seed, std::size_t n = 200) {
  SyntheticSpec spec;
  spec.n = n;
  spec.seed = seed;
  spec.censoring_target = 0.3;
  const SyntheticCohort c = synthesize(spec);

  const SplitIndices si = split(c.ds.n(), {0.6, 0.2, 0.2, seed});
  SmallProblem p;
  std::vector<double> train_times;
  for (std::size_t i : si.train) train_times.push_back(c.ds.time[i]);
  p.tt = fit_time_transform(train_times);
  const Standardizer st = fit_standardizer(c.ds, si.train);
  p.train_in = make_inputs(c.ds, si.train, st, p.tt);
  p.val_in = make_inputs(c.ds, si.val, st, p.tt);

  std::vector<double> y_train;
  for (const auto& o : p.train_in.obs) y_train.push_back(o.y);
  for (std::size_t m = 0; m < c.ds.modalities.size(); ++m) {
    p.mm.modalities.push_back(init_unimodal(
        p.train_in.x[m], y_train, 5,
        seed ^ fnv1a64(c.ds.modalities[m].name), c.ds.modalities[m].name));
  }
  p.mm.reliab_raw.assign(2, 0.0);
  p.mm.transform = p.tt;
  return p;
}

TrainConfig quick_config(std::uint64_t seed, TrainMode mode) {
  TrainConfig tc;
  tc.learning_rate = 0.05;
  tc.batch_size = 64;
  tc.patience = 8;
  tc.max_epochs = 40;
  tc.seed = seed;
  tc.mode = mode;
  return tc;
}

}  // namespace

TEST_CASE("train: validation loss drops well below the initial loss") {
  SmallProblem p = make_problem(1, 400);
  LossConfig lc;
  lc.epsilon = 0.1 * p.tt.y_std;  // benchmark scale, not the tiny default
  const auto val_idx = iota_idx(p.val_in.n());
  LossConfig lc_full = lc;
  lc_full.eta = {1.0, 1.0};
  const double init_loss = loss_all(p.mm, p.val_in, val_idx, lc_full);

  TrainConfig tc = quick_config(1, TrainMode::BRF);
  tc.max_epochs = 150;
  tc.patience = 20;
  const TrainResult r = train(p.mm, p.train_in, p.val_in, tc, lc);
  CHECK(r.epochs_run >= 1);
  CHECK(r.best_val_loss < 0.8 * init_loss);
}

TEST_CASE("train: identical seeds give identical logs and parameters") {
  SmallProblem p1 = make_problem(2);
  SmallProblem p2 = make_problem(2);
  LossConfig lc;
  lc.epsilon = default_epsilon(p1.tt);
  const TrainResult r1 = train(p1.mm, p1.train_in, p1.val_in,
                               quick_config(5, TrainMode::BRF), lc);
  const TrainResult r2 = train(p2.mm, p2.train_in, p2.val_in,
                               quick_config(5, TrainMode::BRF), lc);
  REQUIRE(r1.log.size() == r2.log.size());
  for (std::size_t e = 0; e < r1.log.size(); ++e) {
    CHECK(r1.log[e].train_loss == r2.log[e].train_loss);
    CHECK(r1.log[e].val_loss == r2.log[e].val_loss);
    CHECK(r1.log[e].reliab == r2.log[e].reliab);
  }
  CHECK(pack_params(p1.mm) == pack_params(p2.mm));
}

TEST_CASE("train: patience zero stops right after the first non-improvement") {
  SmallProblem p = make_problem(3);
  LossConfig lc;
  lc.epsilon = default_epsilon(p.tt);
  TrainConfig tc = quick_config(3, TrainMode::BRF);
  tc.patience = 0;
  tc.max_epochs = 60;
  tc.learning_rate = 0.25;  // oscillates quickly
  const TrainResult r = train(p.mm, p.train_in, p.val_in, tc, lc);

  if (r.epochs_run < tc.max_epochs) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t first_bad = 0;
    for (std::size_t e = 0; e < r.log.size(); ++e) {
      if (r.log[e].val_loss < best) {
        best = r.log[e].val_loss;
      } else {
        first_bad = e + 1;
        break;
      }
    }
    CHECK(r.epochs_run == first_bad);
    CHECK(r.best_epoch == first_bad - 1);
  }
}

TEST_CASE("train: returns the minimal-validation-loss parameters") {
  SmallProblem p = make_problem(4);
  LossConfig lc;
  lc.epsilon = default_epsilon(p.tt);
  TrainConfig tc = quick_config(4, TrainMode::BRF);
  tc.patience = 40;
  tc.max_epochs = 25;
  const TrainResult r = train(p.mm, p.train_in, p.val_in, tc, lc);

  double min_val = std::numeric_limits<double>::infinity();
  for (const auto& rec : r.log) min_val = std::min(min_val, rec.val_loss);
  LossConfig lc_eval = lc;
  lc_eval.eta = {1.0, 1.0};
  const auto val_idx = iota_idx(p.val_in.n());
  CHECK(loss_all(p.mm, p.val_in, val_idx, lc_eval) ==
        doctest::Approx(min_val).epsilon(1e-14));
  CHECK(r.best_val_loss == min_val);
}

TEST_CASE("train: mode B equals independent per-modality trainings") {
  SmallProblem joint = make_problem(6);
  const TrainResult rj =
      train(joint.mm, joint.train_in, joint.val_in,
            quick_config(9, TrainMode::B), LossConfig{0.5, default_epsilon(joint.tt), {}, 0.01});

  for (std::size_t m = 0; m < 2; ++m) {
    SmallProblem solo = make_problem(6);
    MultimodalModel single;
    single.modalities.push_back(solo.mm.modalities[m]);
    single.reliab_raw = {0.0};
    single.transform = solo.tt;
    ModelInputs tr;
    tr.x.push_back(solo.train_in.x[m]);
    tr.obs = solo.train_in.obs;
    ModelInputs va;
    va.x.push_back(solo.val_in.x[m]);
    va.obs = solo.val_in.obs;
    train(single, tr, va, quick_config(9, TrainMode::B),
          LossConfig{0.5, default_epsilon(solo.tt), {}, 0.01});

    CHECK(single.modalities[0].prototypes.a ==
          joint.mm.modalities[m].prototypes.a);
    CHECK(single.modalities[0].gammas == joint.mm.modalities[m].gammas);
    CHECK(single.modalities[0].betas.a == joint.mm.modalities[m].betas.a);
    CHECK(single.modalities[0].beta0s == joint.mm.modalities[m].beta0s);
    CHECK(single.modalities[0].raw_sigma2s ==
          joint.mm.modalities[m].raw_sigma2s);
    CHECK(single.modalities[0].raw_hs == joint.mm.modalities[m].raw_hs);
  }
  // reliabilities pinned to one in mode B
  for (double r : joint.mm.reliabilities()) CHECK(r == 1.0);
}

TEST_CASE("train: aborts with a diagnostic on non-finite input") {
  SmallProblem p = make_problem(7);
  p.train_in.x[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
  LossConfig lc;
  lc.epsilon = default_epsilon(p.tt);
  TrainConfig tc = quick_config(7, TrainMode::BRF);
  tc.batch_size = p.train_in.n();  // the poisoned row lands in batch 0
  CHECK_THROWS_AS(train(p.mm, p.train_in, p.val_in, tc, lc), NumericError);
}
