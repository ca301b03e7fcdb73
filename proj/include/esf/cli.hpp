#pragma once

#include <string>
#include <vector>

#include "esf/data.hpp"
#include "esf/metrics.hpp"
#include "esf/model_io.hpp"
#include "esf/training.hpp"

namespace esf {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;
inline constexpr int kExitIo = 5;

// Parsed fit/evaluate configuration document.
struct RunConfig {
  std::string schema_path;  // resolved against the config file directory
  std::string output_dir;
  SplitSpec split;
  TrainConfig train;
  LossConfig loss;                       // epsilon 0 = derive from the fit
  std::vector<std::pair<std::string, double>> eta_by_name;
  std::vector<std::pair<std::string, std::size_t>> k_by_name;
  std::size_t k_default = 30;
  std::string digest;  // of the raw config bytes
};

RunConfig parse_run_config(const std::string& path);

struct FitArtifacts {
  ModelFile model;
  TrainResult result;
  EvalReport val_report;
};

// One full fit at the given seed (split seed and train seed alike).
FitArtifacts fit_run(const RunConfig& cfg, const LoadResult& data,
                     std::uint64_t seed);

struct PredictionRow {
  std::string id;
  double time = 0.0;
  double mu_f = 0.0;
  double sigma2_f = 0.0;
  double h_f = 0.0;
};

struct Evaluation {
  EvalReport report;
  std::vector<PredictionRow> predictions;
};

// Scores one dataset part with a fitted model.
Evaluation evaluate_part(const ModelFile& mf, const SurvivalDataset& ds,
                         std::span<const std::size_t> idx);

std::string format_eval_report(const std::string& part, const Evaluation& ev);
std::string format_summary_report(const std::string& part,
                                  std::span<const std::uint64_t> seeds,
                                  const std::vector<EvalReport>& reports);
std::string format_train_log(const MultimodalModel& mm, const TrainResult& tr);

// Dispatches a full command line (without argv[0]); returns the exit code.
int run_cli(const std::vector<std::string>& args);

}  // namespace esf
