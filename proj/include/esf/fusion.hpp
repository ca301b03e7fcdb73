#pragma once

#include <span>
#include <string>
#include <vector>

#include "esf/ennreg.hpp"
#include "esf/grfn.hpp"
#include "esf/transform.hpp"

namespace esf {

using FeatureViews = std::vector<std::span<const double>>;

// T unimodal models, one learnable reliability per modality (logistic of a
// raw score), and the fitted time transform.
struct MultimodalModel {
  std::vector<UnimodalModel> modalities;
  std::vector<double> reliab_raw;
  TimeTransform transform;

  std::size_t modality_count() const { return modalities.size(); }
  std::vector<double> reliabilities() const;
  std::size_t modality_index(const std::string& name) const;
};

struct FusionOutput {
  Grfn fused;
  std::vector<Grfn> per_modality;  // pre-discount forward outputs
  std::vector<Grfn> discounted;    // reliability-discounted
  std::vector<double> reliabilities;
};

// Runs every unimodal forward, discounts by the learned reliabilities and
// combines the evidence into the fused GRFN.
FusionOutput fuse(const MultimodalModel& mm, const FeatureViews& xs);

struct Prediction {
  double time = 0.0;  // original units
  Grfn fused;         // transformed-time units
};

// Most plausible survival time: the fused location mapped back through the
// inverse transform. sigma2 and h of the fused GRFN carry the aleatory and
// epistemic uncertainty.
Prediction predict(const MultimodalModel& mm, const FeatureViews& xs);

}  // namespace esf
