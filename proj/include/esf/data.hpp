#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "esf/common.hpp"

namespace esf {

// ---- schema -----------------------------------------------------------

struct ModalitySchema {
  std::string name;
  std::string file;
  std::vector<std::string> feature_columns;
  std::vector<std::string> categorical_columns;
};

struct DatasetSchema {
  std::string id_column;
  std::string time_column;
  std::string event_column;
  std::vector<ModalitySchema> modalities;
};

DatasetSchema parse_schema_file(const std::string& path);
DatasetSchema parse_schema_text(const std::string& text);

// ---- dataset ----------------------------------------------------------

struct Modality {
  std::string name;
  std::vector<std::string> feature_names;  // post one-hot
  Matrix x;
};

struct SurvivalDataset {
  std::vector<Modality> modalities;
  std::vector<std::string> ids;
  std::vector<double> time;
  std::vector<int> event;

  std::size_t n() const { return time.size(); }
  std::size_t modality_count() const { return modalities.size(); }
  const Modality& modality(const std::string& name) const;
};

// Per-column ingestion recipe so new rows can be encoded exactly as the
// training data was.
struct ColumnEncoding {
  std::string name;
  bool categorical = false;
  double median = 0.0;                  // numeric imputation value
  std::vector<std::string> categories;  // sorted, for one-hot
};

struct ModalityEncoding {
  std::string name;
  std::vector<ColumnEncoding> columns;
  std::vector<std::string> feature_names;
};

struct LoadResult {
  SurvivalDataset ds;
  std::vector<ModalityEncoding> encodings;
  std::size_t imputed_cells = 0;
  std::size_t dropped_rows = 0;
};

// Joins the modality CSVs on the id column, drops rows with missing
// time/event, median-imputes missing numeric features and one-hot encodes
// the declared categorical ones.
LoadResult load_dataset(const DatasetSchema& schema, const std::string& base_dir);

// ---- csv --------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& origin);
bool is_missing_token(const std::string& s);

// Re-encodes a raw CSV with a stored recipe (imputation medians and one-hot
// categories from fit time). Unseen categories encode as all zeros.
Matrix apply_encoding(const ModalityEncoding& enc, const CsvTable& table);

// ---- split ------------------------------------------------------------

struct SplitSpec {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

SplitIndices split(std::size_t n, const SplitSpec& spec);

// ---- standardization ---------------------------------------------------

struct Standardizer {
  std::vector<std::vector<double>> mean;   // per modality, per feature
  std::vector<std::vector<double>> scale;  // 1.0 for constant features
  std::size_t constant_features = 0;
};

Standardizer fit_standardizer(const SurvivalDataset& ds,
                              std::span<const std::size_t> train_idx);
void standardize_apply(const Standardizer& st, std::size_t modality, Matrix& x);
void standardize_undo(const Standardizer& st, std::size_t modality, Matrix& x);

Matrix select_rows(const Matrix& x, std::span<const std::size_t> idx);

// ---- synthetic cohort ---------------------------------------------------

struct SyntheticSpec {
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  double censoring_target = 0.6;
  std::size_t d_signal = 5;
  std::size_t d_noise = 5;
  std::vector<double> w_signal = {0.25, -0.2, 0.15, -0.1, 0.1};
  double log_time_intercept = 2.0;
  double noise_sd = 0.3;
  double noise_modality_weight = 0.0;  // optional weak signal in modality 2
};

struct SyntheticCohort {
  SurvivalDataset ds;
  std::vector<double> true_time;  // uncensored ground truth
  std::vector<double> true_risk;  // negative true log-time signal
  double achieved_censoring = 0.0;
};

// Two-modality generator: "signal" carries the survival signal, "noise" is
// pure noise unless noise_modality_weight is set. Censoring times are drawn
// independently to hit the target rate.
SyntheticCohort synthesize(const SyntheticSpec& spec);

// Writes the cohort as loadable CSVs plus schema.json and truth.csv.
void write_synthetic(const std::string& dir, const SyntheticCohort& cohort);

}  // namespace esf
