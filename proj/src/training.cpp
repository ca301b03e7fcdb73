#include "esf/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "esf/rng.hpp"

namespace esf {

namespace {

constexpr double kLogFloor = 1e-300;

// Shared by the value and gradient paths so both floor, count and weigh the
// log terms identically.
template <class T>
T loss_from_bel_pl(const detail::TBelPl<T>& bp, double lambda,
                   LossDiag* diag) {
  using std::log;
  T loss(0.0);
  if (lambda > 0.0) {
    if (diag) ++diag->terms;
    if (value_of(bp.bel) < kLogFloor) {
      if (diag) ++diag->clamp_events;
      loss = loss + T(lambda * -std::log(kLogFloor));
    } else {
      loss = loss + T(-lambda) * log(bp.bel);
    }
  }
  if (lambda < 1.0) {
    if (diag) ++diag->terms;
    if (value_of(bp.pl) < kLogFloor) {
      if (diag) ++diag->clamp_events;
      loss = loss + T((1.0 - lambda) * -std::log(kLogFloor));
    } else {
      loss = loss + T(-(1.0 - lambda)) * log(bp.pl);
    }
  }
  return loss;
}

RealInterval evidence_interval(const Observation& obs, double epsilon) {
  if (obs.d == 1) return {obs.y - epsilon, obs.y + epsilon};
  return RealInterval::at_least(obs.y);
}

void check_loss_config(const LossConfig& cfg, std::size_t t) {
  if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0))
    throw DomainError("loss: lambda outside [0,1]");
  if (!(cfg.epsilon > 0.0)) throw DomainError("loss: epsilon must be positive");
  if (!cfg.eta.empty() && cfg.eta.size() != t)
    throw DomainError("loss: eta size must match the modality count");
  for (double e : cfg.eta)
    if (!(e >= 0.0)) throw DomainError("loss: eta weights must be nonnegative");
  if (!(cfg.varphi >= 0.0)) throw DomainError("loss: varphi must be nonnegative");
}

double eta_at(const LossConfig& cfg, std::size_t i) {
  return cfg.eta.empty() ? 1.0 : cfg.eta[i];
}

// Loss of one GRFN plus its derivative with respect to (mu, sigma2, h).
double loss_interval_grad(const Grfn& g, const Observation& obs,
                          const LossConfig& cfg, LossDiag* diag,
                          double out[3]) {
  const RealInterval a = evidence_interval(obs, cfg.epsilon);
  const Dual3 mu = Dual3::seeded(g.mu, 0);
  const Dual3 v = Dual3::seeded(g.sigma2, 1);
  const Dual3 h = Dual3::seeded(g.h, 2);
  const detail::TBelPl<Dual3> bp = detail::bel_pl_eval(mu, v, h, a.lo, a.hi);
  const Dual3 loss = loss_from_bel_pl(bp, cfg.lambda, diag);
  out[0] = loss.d0;
  out[1] = loss.d1;
  out[2] = loss.d2;
  return loss.v;
}

}  // namespace

TrainMode parse_mode(const std::string& s) {
  if (s == "B") return TrainMode::B;
  if (s == "B+R") return TrainMode::BR;
  if (s == "B+R+F") return TrainMode::BRF;
  throw ConfigError("unknown mode '" + s + "' (expected B, B+R or B+R+F)");
}

std::string mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::B:
      return "B";
    case TrainMode::BR:
      return "B+R";
    default:
      return "B+R+F";
  }
}

double default_epsilon(const TimeTransform& tt) {
  if (!(tt.y_std > 0.0)) throw DomainError("default_epsilon: unfitted transform");
  return 1e-4 * tt.y_std;
}

double loss_interval(const Grfn& g, const Observation& obs,
                     const LossConfig& cfg, LossDiag* diag) {
  validate(g);
  if (obs.d != 0 && obs.d != 1)
    throw DomainError("loss: censoring indicator must be 0 or 1");
  if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0))
    throw DomainError("loss: lambda outside [0,1]");
  if (!(cfg.epsilon > 0.0)) throw DomainError("loss: epsilon must be positive");
  const RealInterval a = evidence_interval(obs, cfg.epsilon);
  const auto bp = detail::bel_pl_eval<double>(g.mu, g.sigma2, g.h, a.lo, a.hi);
  return loss_from_bel_pl(bp, cfg.lambda, diag);
}

ModelInputs make_inputs(const SurvivalDataset& ds,
                        std::span<const std::size_t> idx,
                        const Standardizer& st, const TimeTransform& tt) {
  ModelInputs in;
  in.x.reserve(ds.modalities.size());
  for (std::size_t m = 0; m < ds.modalities.size(); ++m) {
    Matrix x = select_rows(ds.modalities[m].x, idx);
    standardize_apply(st, m, x);
    in.x.push_back(std::move(x));
  }
  in.obs.reserve(idx.size());
  for (std::size_t i : idx)
    in.obs.push_back(Observation{forward(tt, ds.time[i]), ds.event[i]});
  return in;
}

double loss_all(const MultimodalModel& mm, const ModelInputs& in,
                std::span<const std::size_t> idx, const LossConfig& cfg,
                LossDiag* diag) {
  const std::size_t t = mm.modality_count();
  check_loss_config(cfg, t);
  if (idx.empty()) throw DomainError("loss_all: empty batch");
  if (in.x.size() != t) throw DomainError("loss_all: modality count mismatch");

  double total = 0.0;
  for (std::size_t i : idx) {
    const FusionOutput f = fuse(mm, in.row(i));
    const Observation& obs = in.obs[i];
    double sample = 0.0;
    for (std::size_t m = 0; m < t; ++m) {
      const double eta = eta_at(cfg, m);
      if (eta == 0.0) continue;
      sample += eta * loss_interval(f.discounted[m], obs, cfg, diag);
    }
    if (cfg.varphi != 0.0)
      sample += cfg.varphi * loss_interval(f.fused, obs, cfg, diag);
    total += sample;
  }
  return total / static_cast<double>(idx.size());
}

ParamLayout ParamLayout::of(const MultimodalModel& mm) {
  ParamLayout l;
  std::size_t off = 0;
  for (const auto& m : mm.modalities) {
    Ranges r;
    r.k = m.k;
    r.d = m.d;
    r.begin = off;
    r.prototypes = off;
    off += m.k * m.d;
    r.gammas = off;
    off += m.k;
    r.betas = off;
    off += m.k * m.d;
    r.beta0s = off;
    off += m.k;
    r.raw_sigma2s = off;
    off += m.k;
    r.raw_hs = off;
    off += m.k;
    r.end = off;
    l.mods.push_back(r);
  }
  l.reliab = off;
  off += mm.reliab_raw.size();
  l.total = off;
  return l;
}

std::vector<double> pack_params(const MultimodalModel& mm) {
  const ParamLayout l = ParamLayout::of(mm);
  std::vector<double> p(l.total);
  for (std::size_t m = 0; m < mm.modalities.size(); ++m) {
    const auto& mod = mm.modalities[m];
    const auto& r = l.mods[m];
    std::copy(mod.prototypes.a.begin(), mod.prototypes.a.end(),
              p.begin() + r.prototypes);
    std::copy(mod.gammas.begin(), mod.gammas.end(), p.begin() + r.gammas);
    std::copy(mod.betas.a.begin(), mod.betas.a.end(), p.begin() + r.betas);
    std::copy(mod.beta0s.begin(), mod.beta0s.end(), p.begin() + r.beta0s);
    std::copy(mod.raw_sigma2s.begin(), mod.raw_sigma2s.end(),
              p.begin() + r.raw_sigma2s);
    std::copy(mod.raw_hs.begin(), mod.raw_hs.end(), p.begin() + r.raw_hs);
  }
  std::copy(mm.reliab_raw.begin(), mm.reliab_raw.end(), p.begin() + l.reliab);
  return p;
}

void unpack_params(MultimodalModel& mm, std::span<const double> p) {
  const ParamLayout l = ParamLayout::of(mm);
  if (p.size() != l.total) throw DomainError("unpack_params: size mismatch");
  for (std::size_t m = 0; m < mm.modalities.size(); ++m) {
    auto& mod = mm.modalities[m];
    const auto& r = l.mods[m];
    std::copy(p.begin() + r.prototypes, p.begin() + r.prototypes + mod.k * mod.d,
              mod.prototypes.a.begin());
    std::copy(p.begin() + r.gammas, p.begin() + r.gammas + mod.k,
              mod.gammas.begin());
    std::copy(p.begin() + r.betas, p.begin() + r.betas + mod.k * mod.d,
              mod.betas.a.begin());
    std::copy(p.begin() + r.beta0s, p.begin() + r.beta0s + mod.k,
              mod.beta0s.begin());
    std::copy(p.begin() + r.raw_sigma2s, p.begin() + r.raw_sigma2s + mod.k,
              mod.raw_sigma2s.begin());
    std::copy(p.begin() + r.raw_hs, p.begin() + r.raw_hs + mod.k,
              mod.raw_hs.begin());
  }
  std::copy(p.begin() + l.reliab, p.begin() + l.reliab + mm.reliab_raw.size(),
            mm.reliab_raw.begin());
}

GradResult gradient(const MultimodalModel& mm, const ModelInputs& in,
                    std::span<const std::size_t> idx, const LossConfig& cfg) {
  const std::size_t t = mm.modality_count();
  check_loss_config(cfg, t);
  if (idx.empty()) throw DomainError("gradient: empty batch");

  const ParamLayout layout = ParamLayout::of(mm);
  GradResult res;
  res.grad.assign(layout.total, 0.0);

  std::vector<UniTape> tapes(t);
  std::vector<double> g_mu(t), g_v(t), g_h(t), g_r(t);
  const std::vector<double> rel = mm.reliabilities();

  for (std::size_t row : idx) {
    const FeatureViews xs = in.row(row);
    const Observation& obs = in.obs[row];

    std::vector<Grfn> per_mod(t);
    for (std::size_t m = 0; m < t; ++m)
      per_mod[m] = forward(mm.modalities[m], xs[m], &tapes[m]);
    const Grfn fused = combine(per_mod, rel);

    std::fill(g_mu.begin(), g_mu.end(), 0.0);
    std::fill(g_v.begin(), g_v.end(), 0.0);
    std::fill(g_h.begin(), g_h.end(), 0.0);
    std::fill(g_r.begin(), g_r.end(), 0.0);

    double sample_loss = 0.0;

    for (std::size_t m = 0; m < t; ++m) {
      const double eta = eta_at(cfg, m);
      if (eta == 0.0) continue;
      const Grfn disc{per_mod[m].mu, per_mod[m].sigma2, rel[m] * per_mod[m].h};
      double d[3];
      sample_loss += eta * loss_interval_grad(disc, obs, cfg, &res.diag, d);
      g_mu[m] += eta * d[0];
      g_v[m] += eta * d[1];
      g_h[m] += eta * d[2] * rel[m];
      g_r[m] += eta * d[2] * per_mod[m].h;
    }

    if (cfg.varphi != 0.0) {
      double d[3];
      sample_loss += cfg.varphi *
                     loss_interval_grad(fused, obs, cfg, &res.diag, d);
      const double af = cfg.varphi * d[0];
      const double bf = cfg.varphi * d[1];
      const double cf = cfg.varphi * d[2];

      std::size_t active = 0, last = 0;
      for (std::size_t m = 0; m < t; ++m) {
        if (rel[m] * per_mod[m].h > 0.0) {
          ++active;
          last = m;
        }
      }
      if (active == 1) {
        g_mu[last] += af;
        g_v[last] += bf;
        g_h[last] += cf * rel[last];
        g_r[last] += cf * per_mod[last].h;
      } else if (active > 1) {
        const double F = fused.h;
        for (std::size_t m = 0; m < t; ++m) {
          const double rho = rel[m] * per_mod[m].h;
          g_mu[m] += af * rho / F;
          g_v[m] += bf * rho * rho / (F * F);
          const double g_rho =
              af * (per_mod[m].mu - fused.mu) / F +
              bf * (2.0 * rho * per_mod[m].sigma2 / (F * F) -
                    2.0 * fused.sigma2 / F) +
              cf;
          g_h[m] += g_rho * rel[m];
          g_r[m] += g_rho * per_mod[m].h;
        }
      }
      // active == 0: the fused GRFN is vacuous and the loss locally constant.
    }

    res.loss += sample_loss;

    // Backward through each modality's prototype combination.
    for (std::size_t m = 0; m < t; ++m) {
      const auto& mod = mm.modalities[m];
      const auto& tape = tapes[m];
      const auto& lr = layout.mods[m];
      const double gm = g_mu[m], gv = g_v[m], gh = g_h[m];
      if (gm == 0.0 && gv == 0.0 && gh == 0.0) {
        // reliab gradient may still be present
      } else {
        std::size_t active = 0, last = 0;
        for (std::size_t p = 0; p < mod.k; ++p) {
          if (tape.h_eff[p] > 0.0) {
            ++active;
            last = p;
          }
        }
        if (active > 0) {
          const double H = tape.out.h;
          const double mu_i = tape.out.mu;
          const double v_i = tape.out.sigma2;
          for (std::size_t p = 0; p < mod.k; ++p) {
            double gmu_k, gs2_k, gheff_k;
            if (active == 1) {
              if (p != last) continue;
              gmu_k = gm;
              gs2_k = gv;
              gheff_k = gh;
            } else {
              const double he = tape.h_eff[p];
              gmu_k = gm * he / H;
              gs2_k = gv * he * he / (H * H);
              gheff_k = gm * (tape.mu_k[p] - mu_i) / H +
                        gv * (2.0 * he * mod.sigma2_at(p) / (H * H) -
                              2.0 * v_i / H) +
                        gh;
            }
            const double s = tape.s[p];
            const double hk = mod.h_at(p);
            const double gs = gheff_k * hk;
            const double ghk = gheff_k * s;
            res.grad[lr.raw_hs + p] += ghk * num::sigmoid(mod.raw_hs[p]);
            res.grad[lr.raw_sigma2s + p] +=
                gs2_k * num::sigmoid(mod.raw_sigma2s[p]);
            res.grad[lr.gammas + p] +=
                gs * s * (-2.0 * mod.gammas[p] * tape.dist2[p]);
            const double gd2 = gs * (-mod.gammas[p] * mod.gammas[p] * s);
            const auto x = xs[m];
            for (std::size_t j = 0; j < mod.d; ++j) {
              res.grad[lr.prototypes + p * mod.d + j] +=
                  gd2 * 2.0 * (mod.prototypes(p, j) - x[j]);
              res.grad[lr.betas + p * mod.d + j] += gmu_k * x[j];
            }
            res.grad[lr.beta0s + p] += gmu_k;
          }
        }
      }
      res.grad[layout.reliab + m] += g_r[m] * rel[m] * (1.0 - rel[m]);
    }
  }

  const double inv_n = 1.0 / static_cast<double>(idx.size());
  res.loss *= inv_n;
  for (double& g : res.grad) g *= inv_n;
  return res;
}

namespace {

double param_norm(std::span<const double> p, std::size_t begin,
                  std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += p[i] * p[i];
  return std::sqrt(s);
}

}  // namespace

TrainResult train(MultimodalModel& mm, const ModelInputs& train_in,
                  const ModelInputs& val_in, const TrainConfig& tc,
                  LossConfig lc) {
  const std::size_t t = mm.modality_count();
  if (train_in.n() == 0 || val_in.n() == 0)
    throw DomainError("train: empty train or validation part");
  if (lc.eta.empty()) lc.eta.assign(t, 1.0);
  if (tc.mode != TrainMode::BRF) lc.varphi = 0.0;
  check_loss_config(lc, t);
  if (!(tc.learning_rate > 0.0) || tc.batch_size == 0 || tc.max_epochs == 0)
    throw DomainError("train: invalid training configuration");

  const bool per_modality_stop = tc.mode == TrainMode::B;
  if (per_modality_stop) mm.reliab_raw.assign(t, 40.0);  // logistic -> 1.0

  const ParamLayout layout = ParamLayout::of(mm);
  std::vector<double> params = pack_params(mm);
  std::vector<double> adam_m(layout.total, 0.0);
  std::vector<double> adam_v(layout.total, 0.0);
  std::vector<std::uint8_t> masked(layout.total, 0);
  if (per_modality_stop)
    for (std::size_t i = layout.reliab; i < layout.total; ++i) masked[i] = 1;

  std::vector<std::size_t> train_idx(train_in.n());
  for (std::size_t i = 0; i < train_idx.size(); ++i) train_idx[i] = i;
  std::vector<std::size_t> val_idx(val_in.n());
  for (std::size_t i = 0; i < val_idx.size(); ++i) val_idx[i] = i;

  Rng rng(tc.seed);
  TrainResult out;

  // Global stopper (modes B+R, B+R+F).
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<double> best_params = params;
  std::size_t bad = 0;

  // Per-modality stoppers (mode B).
  std::vector<double> best_uni(t, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> bad_uni(t, 0);
  std::vector<std::uint8_t> frozen(t, 0);
  std::vector<std::size_t> best_epoch_uni(t, 0);

  auto val_uni_losses = [&]() {
    std::vector<double> u(t, 0.0);
    for (std::size_t i : val_idx) {
      const FusionOutput f = fuse(mm, val_in.row(i));
      for (std::size_t m = 0; m < t; ++m)
        u[m] += loss_interval(f.discounted[m], val_in.obs[i], lc, nullptr);
    }
    for (double& x : u) x /= static_cast<double>(val_idx.size());
    return u;
  };

  std::uint64_t adam_t = 0;
  for (std::size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    rng.shuffle(train_idx);

    double train_loss = 0.0;
    std::size_t n_batches = 0;
    LossDiag epoch_diag;
    for (std::size_t start = 0; start < train_idx.size();
         start += tc.batch_size) {
      const std::size_t len =
          std::min(tc.batch_size, train_idx.size() - start);
      const std::span<const std::size_t> batch(train_idx.data() + start, len);
      auto batch_diag = [&](const std::string& why) {
        std::string msg = why + " at epoch " + std::to_string(epoch) +
                          " batch " + std::to_string(n_batches) +
                          "; parameter norms:";
        for (std::size_t m = 0; m < t; ++m)
          msg += " " + mm.modalities[m].name + "=" +
                 fmt_g(param_norm(params, layout.mods[m].begin,
                                  layout.mods[m].end));
        return msg;
      };
      GradResult g;
      try {
        g = gradient(mm, train_in, batch, lc);
      } catch (const DomainError& e) {
        throw NumericError(batch_diag(std::string("numeric failure (") +
                                      e.what() + ")"));
      }
      if (!std::isfinite(g.loss)) throw NumericError(batch_diag("non-finite loss"));
      train_loss += g.loss;
      epoch_diag.clamp_events += g.diag.clamp_events;
      epoch_diag.terms += g.diag.terms;
      ++n_batches;
      ++adam_t;

      const double bc1 = 1.0 - std::pow(tc.adam_beta1, adam_t);
      const double bc2 = 1.0 - std::pow(tc.adam_beta2, adam_t);
      for (std::size_t j = 0; j < layout.total; ++j) {
        if (masked[j]) continue;
        const double gj = g.grad[j];
        adam_m[j] = tc.adam_beta1 * adam_m[j] + (1.0 - tc.adam_beta1) * gj;
        adam_v[j] = tc.adam_beta2 * adam_v[j] + (1.0 - tc.adam_beta2) * gj * gj;
        params[j] -= tc.learning_rate * (adam_m[j] / bc1) /
                     (std::sqrt(adam_v[j] / bc2) + tc.adam_eps);
      }
      unpack_params(mm, params);
    }
    train_loss /= static_cast<double>(n_batches);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_loss;
    rec.val_loss = loss_all(mm, val_in, val_idx, lc, nullptr);
    rec.clamp_rate = epoch_diag.terms == 0
                         ? 0.0
                         : static_cast<double>(epoch_diag.clamp_events) /
                               static_cast<double>(epoch_diag.terms);
    rec.reliab = mm.reliabilities();
    rec.val_uni = val_uni_losses();
    out.log.push_back(rec);
    out.epochs_run = epoch;
    if (rec.clamp_rate > 0.01)
      std::fprintf(stderr,
                   "warning: epoch %zu floored %.2f%% of loss log terms\n",
                   epoch, 100.0 * rec.clamp_rate);
    if (!std::isfinite(rec.val_loss))
      throw NumericError("non-finite validation loss at epoch " +
                         std::to_string(epoch));

    if (per_modality_stop) {
      bool all_frozen = true;
      for (std::size_t m = 0; m < t; ++m) {
        if (frozen[m]) continue;
        if (rec.val_uni[m] < best_uni[m]) {
          best_uni[m] = rec.val_uni[m];
          best_epoch_uni[m] = epoch;
          bad_uni[m] = 0;
          std::copy(params.begin() + layout.mods[m].begin,
                    params.begin() + layout.mods[m].end,
                    best_params.begin() + layout.mods[m].begin);
        } else {
          ++bad_uni[m];
          if (bad_uni[m] > tc.patience) {
            frozen[m] = 1;
            for (std::size_t j = layout.mods[m].begin;
                 j < layout.mods[m].end; ++j)
              masked[j] = 1;
          }
        }
        if (!frozen[m]) all_frozen = false;
      }
      if (all_frozen) break;
    } else {
      if (rec.val_loss < best_val) {
        best_val = rec.val_loss;
        best_params = params;
        out.best_epoch = epoch;
        bad = 0;
      } else {
        ++bad;
        if (bad > tc.patience) break;
      }
    }
  }

  if (per_modality_stop) {
    std::copy(best_params.begin() + layout.reliab, best_params.end(),
              params.begin() + layout.reliab);
    for (std::size_t m = 0; m < t; ++m)
      std::copy(best_params.begin() + layout.mods[m].begin,
                best_params.begin() + layout.mods[m].end,
                params.begin() + layout.mods[m].begin);
    unpack_params(mm, params);
    out.best_epoch = *std::max_element(best_epoch_uni.begin(),
                                       best_epoch_uni.end());
    out.best_val_loss = loss_all(mm, val_in, val_idx, lc, nullptr);
  } else {
    unpack_params(mm, best_params);
    out.best_val_loss = best_val;
  }
  return out;
}

}  // namespace esf
