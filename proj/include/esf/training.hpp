#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "esf/data.hpp"
#include "esf/fusion.hpp"

namespace esf {

// Ablation modes: B trains each modality independently with reliabilities
// frozen at 1; B+R adds reliability learning on the unimodal losses; B+R+F
// adds the fused-evidence loss term.
enum class TrainMode { B, BR, BRF };

TrainMode parse_mode(const std::string& s);
std::string mode_name(TrainMode m);

struct LossConfig {
  double lambda = 0.5;        // belief/plausibility trade-off
  double epsilon = 0.0;       // uncensored interval half-width (transformed units)
  std::vector<double> eta;    // per-modality unimodal loss weights
  double varphi = 0.01;       // fused loss weight
};

// Default epsilon of 1e-4 times the transformed-time standard deviation.
double default_epsilon(const TimeTransform& tt);

struct Observation {
  double y = 0.0;  // transformed time
  int d = 1;       // 1 = event observed, 0 = right-censored
};

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t batch_size = 512;
  std::size_t patience = 20;
  std::size_t max_epochs = 500;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  TrainMode mode = TrainMode::BRF;
};

struct LossDiag {
  std::uint64_t clamp_events = 0;  // floored log arguments
  std::uint64_t terms = 0;         // weighted log terms evaluated
};

// -ln Bel / -ln Pl of the evidence interval: [y-eps, y+eps] when the event
// was observed, [y, inf) when censored.
double loss_interval(const Grfn& g, const Observation& obs,
                     const LossConfig& cfg, LossDiag* diag = nullptr);

// Aligned per-modality design matrices plus transformed observations.
struct ModelInputs {
  std::vector<Matrix> x;
  std::vector<Observation> obs;

  std::size_t n() const { return obs.size(); }
  FeatureViews row(std::size_t i) const {
    FeatureViews v;
    v.reserve(x.size());
    for (const auto& m : x) v.push_back(m.row(i));
    return v;
  }
};

ModelInputs make_inputs(const SurvivalDataset& ds,
                        std::span<const std::size_t> idx,
                        const Standardizer& st, const TimeTransform& tt);

// Mean over the rows of sum_i eta_i * unimodal loss on the discounted GRFN
// plus varphi * loss on the fused GRFN.
double loss_all(const MultimodalModel& mm, const ModelInputs& in,
                std::span<const std::size_t> idx, const LossConfig& cfg,
                LossDiag* diag = nullptr);

// Flat parameter vector layout: per modality prototypes, gammas, betas,
// beta0s, raw sigma2s, raw hs; then the raw reliabilities.
struct ParamLayout {
  struct Ranges {
    std::size_t prototypes = 0;
    std::size_t gammas = 0;
    std::size_t betas = 0;
    std::size_t beta0s = 0;
    std::size_t raw_sigma2s = 0;
    std::size_t raw_hs = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t k = 0;
    std::size_t d = 0;
  };
  std::vector<Ranges> mods;
  std::size_t reliab = 0;
  std::size_t total = 0;

  static ParamLayout of(const MultimodalModel& mm);
};

std::vector<double> pack_params(const MultimodalModel& mm);
void unpack_params(MultimodalModel& mm, std::span<const double> p);

struct GradResult {
  std::vector<double> grad;  // ParamLayout order, mean over the batch
  double loss = 0.0;
  LossDiag diag;
};

// Exact gradient of loss_all over the given rows with respect to every
// trainable parameter; verified against central finite differences.
GradResult gradient(const MultimodalModel& mm, const ModelInputs& in,
                    std::span<const std::size_t> idx, const LossConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double clamp_rate = 0.0;
  std::vector<double> reliab;
  std::vector<double> val_uni;  // per-modality mean unimodal val loss
};

struct TrainResult {
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  std::size_t epochs_run = 0;
};

// Mini-batch Adam with early stopping on the validation loss; returns the
// parameters of the best validation epoch. Mode B keeps a separate early
// stopper per modality so the joint run matches independent trainings.
TrainResult train(MultimodalModel& mm, const ModelInputs& train_in,
                  const ModelInputs& val_in, const TrainConfig& tc,
                  LossConfig lc);

}  // namespace esf
