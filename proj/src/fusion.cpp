#include "esf/fusion.hpp"

namespace esf {

std::vector<double> MultimodalModel::reliabilities() const {
  std::vector<double> r(reliab_raw.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = num::sigmoid(reliab_raw[i]);
  return r;
}

std::size_t MultimodalModel::modality_index(const std::string& name) const {
  for (std::size_t i = 0; i < modalities.size(); ++i)
    if (modalities[i].name == name) return i;
  throw DataError("unknown modality: " + name);
}

FusionOutput fuse(const MultimodalModel& mm, const FeatureViews& xs) {
  const std::size_t t = mm.modality_count();
  if (xs.size() != t)
    throw DomainError("fuse: expected " + std::to_string(t) +
                      " feature vectors, got " + std::to_string(xs.size()));
  if (mm.reliab_raw.size() != t)
    throw DomainError("fuse: reliability count mismatch");

  FusionOutput out;
  out.reliabilities = mm.reliabilities();
  out.per_modality.reserve(t);
  out.discounted.reserve(t);
  for (std::size_t i = 0; i < t; ++i) {
    const Grfn g = forward(mm.modalities[i], xs[i]);
    out.per_modality.push_back(g);
    out.discounted.push_back(discount(g, out.reliabilities[i]));
  }
  out.fused = combine(out.per_modality, out.reliabilities);
  return out;
}

Prediction predict(const MultimodalModel& mm, const FeatureViews& xs) {
  const FusionOutput f = fuse(mm, xs);
  Prediction p;
  p.fused = f.fused;
  p.time = inverse(mm.transform, f.fused.mu);
  return p;
}

}  // namespace esf
