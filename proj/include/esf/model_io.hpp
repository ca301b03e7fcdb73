#pragma once

#include <string>
#include <vector>

#include "esf/data.hpp"
#include "esf/fusion.hpp"

namespace esf {

struct ModelMetadata {
  std::uint64_t seed = 0;
  std::string config_digest;
  std::size_t best_epoch = 0;
  std::string mode = "B+R+F";
};

// Everything needed to score new data: parameters, the time transform, the
// per-modality ingestion recipes and standardization statistics.
struct ModelFile {
  MultimodalModel model;
  std::vector<ModalityEncoding> encodings;
  Standardizer standardizer;
  ModelMetadata meta;
};

std::string model_to_json(const ModelFile& mf);
ModelFile model_from_json(const std::string& text);

void save_model(const std::string& path, const ModelFile& mf);
ModelFile load_model(const std::string& path);

}  // namespace esf
