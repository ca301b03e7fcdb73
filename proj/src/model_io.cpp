#include "esf/model_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace esf {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) { return json(m.a); }

Matrix matrix_from_json(const json& j, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  const auto v = j.get<std::vector<double>>();
  if (v.size() != rows * cols)
    throw ConfigError("model file: matrix size mismatch");
  m.a = v;
  return m;
}

}  // namespace

std::string model_to_json(const ModelFile& mf) {
  json j;
  j["format_version"] = 1;
  j["transform"] = {{"yj_lambda", mf.model.transform.yj_lambda},
                    {"fitted_on_n", mf.model.transform.fitted_on_n},
                    {"y_std", mf.model.transform.y_std}};
  j["reliab_raw"] = mf.model.reliab_raw;

  json mods = json::array();
  for (std::size_t i = 0; i < mf.model.modalities.size(); ++i) {
    const UnimodalModel& m = mf.model.modalities[i];
    json jm;
    jm["name"] = m.name;
    jm["k"] = m.k;
    jm["d"] = m.d;
    jm["prototypes"] = matrix_to_json(m.prototypes);
    jm["gammas"] = m.gammas;
    jm["betas"] = matrix_to_json(m.betas);
    jm["beta0s"] = m.beta0s;
    jm["raw_sigma2s"] = m.raw_sigma2s;
    jm["raw_hs"] = m.raw_hs;

    const ModalityEncoding& enc = mf.encodings.at(i);
    json cols = json::array();
    for (const auto& c : enc.columns) {
      json jc;
      jc["name"] = c.name;
      jc["categorical"] = c.categorical;
      if (c.categorical)
        jc["categories"] = c.categories;
      else
        jc["median"] = c.median;
      cols.push_back(jc);
    }
    jm["encoding"] = {{"columns", cols}, {"feature_names", enc.feature_names}};
    jm["standardize_mean"] = mf.standardizer.mean.at(i);
    jm["standardize_scale"] = mf.standardizer.scale.at(i);
    mods.push_back(jm);
  }
  j["modalities"] = mods;

  j["metadata"] = {{"seed", mf.meta.seed},
                   {"config_digest", mf.meta.config_digest},
                   {"best_epoch", mf.meta.best_epoch},
                   {"mode", mf.meta.mode}};
  return j.dump(2) + "\n";
}

ModelFile model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model file parse error: ") + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != 1)
      throw ConfigError("model file: unsupported format version");
    ModelFile mf;
    mf.model.transform.yj_lambda = j.at("transform").at("yj_lambda");
    mf.model.transform.fitted_on_n = j.at("transform").at("fitted_on_n");
    mf.model.transform.y_std = j.at("transform").at("y_std");
    mf.model.reliab_raw = j.at("reliab_raw").get<std::vector<double>>();

    for (const auto& jm : j.at("modalities")) {
      UnimodalModel m;
      m.name = jm.at("name").get<std::string>();
      m.k = jm.at("k").get<std::size_t>();
      m.d = jm.at("d").get<std::size_t>();
      m.prototypes = matrix_from_json(jm.at("prototypes"), m.k, m.d);
      m.gammas = jm.at("gammas").get<std::vector<double>>();
      m.betas = matrix_from_json(jm.at("betas"), m.k, m.d);
      m.beta0s = jm.at("beta0s").get<std::vector<double>>();
      m.raw_sigma2s = jm.at("raw_sigma2s").get<std::vector<double>>();
      m.raw_hs = jm.at("raw_hs").get<std::vector<double>>();
      if (m.gammas.size() != m.k || m.beta0s.size() != m.k ||
          m.raw_sigma2s.size() != m.k || m.raw_hs.size() != m.k)
        throw ConfigError("model file: parameter array length mismatch");
      mf.model.modalities.push_back(std::move(m));

      ModalityEncoding enc;
      enc.name = mf.model.modalities.back().name;
      for (const auto& jc : jm.at("encoding").at("columns")) {
        ColumnEncoding c;
        c.name = jc.at("name").get<std::string>();
        c.categorical = jc.at("categorical").get<bool>();
        if (c.categorical)
          c.categories = jc.at("categories").get<std::vector<std::string>>();
        else
          c.median = jc.at("median").get<double>();
        enc.columns.push_back(std::move(c));
      }
      enc.feature_names =
          jm.at("encoding").at("feature_names").get<std::vector<std::string>>();
      mf.encodings.push_back(std::move(enc));
      mf.standardizer.mean.push_back(
          jm.at("standardize_mean").get<std::vector<double>>());
      mf.standardizer.scale.push_back(
          jm.at("standardize_scale").get<std::vector<double>>());
    }

    mf.meta.seed = j.at("metadata").at("seed").get<std::uint64_t>();
    mf.meta.config_digest = j.at("metadata").at("config_digest");
    mf.meta.best_epoch = j.at("metadata").at("best_epoch").get<std::size_t>();
    mf.meta.mode = j.at("metadata").at("mode");

    if (mf.model.reliab_raw.size() != mf.model.modalities.size())
      throw ConfigError("model file: reliability count mismatch");
    return mf;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model file: ") + e.what());
  }
}

void save_model(const std::string& path, const ModelFile& mf) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write model file: " + path);
  f << model_to_json(mf);
  if (!f) throw IoError("failed writing model file: " + path);
}

ModelFile load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open model file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace esf
