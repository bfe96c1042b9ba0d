#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hepforest/boosting.hpp"
#include "hepforest/dataset.hpp"
#include "hepforest/model.hpp"

namespace hepforest::run {

enum class SampleWeighting : std::uint8_t { Balanced, Raw, Uniform };

struct DataPaths {
  // Single file carrying a split column.
  std::string path;
  // Or one file per split.
  std::string train;
  std::string validation;
  std::string test;
};

struct ModelSpec {
  ModelKind kind = ModelKind::BXT;
  TreeConfig tree;
  std::size_t n_trees = 100;
  bool bootstrap = true;
  std::size_t n_stages = 20;
  InitWeights init_weights = InitWeights::Balanced;
};

struct BenchmarkSpec {
  std::vector<ModelKind> models = {ModelKind::Tree, ModelKind::RF, ModelKind::ET};
  std::vector<std::size_t> n_trees = {10, 20, 40, 80};
};

struct RunConfig {
  DataPaths data;
  CsvSchema schema;
  ModelSpec model;
  SampleWeighting sample_weights = SampleWeighting::Balanced;
  double percentile = 85.0;
  std::vector<double> percentile_grid = {70, 72, 74, 76, 78, 80, 82, 84, 85, 86, 88, 90, 92, 94, 96};
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  unsigned workers = 0;
  bool impute = true;
  // Rescale each split's raw weights so class totals match the reference
  // totals (whole file, or the training split with per-split files).
  bool rescale_weights = false;
  std::size_t histogram_bins = 20;
  BenchmarkSpec benchmark;

  void validate() const;
};

// Documented defaults as a JSON document (printed by --help).
nlohmann::json default_config_json();

RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& c);

// Loads one split with the configured schema and optional rescaling. No imputation.
Dataset load_split(const RunConfig& cfg, Provenance split);

EnsembleConfig ensemble_config(const RunConfig& cfg, EnsembleFlavor flavor);
BoostConfig boost_config(const RunConfig& cfg);

struct TrainResult {
  Model model;
  std::vector<StageTrace> stages;
  double seconds = 0.0;
};

// Fits the configured model on an (unimputed) training set; imputation
// medians are fitted on it when enabled.
TrainResult train_model(const RunConfig& cfg, const Dataset& train);

struct EvalReport {
  std::string model;
  std::string split;
  std::size_t n = 0;
  double percentile = 0.0;
  double threshold = 0.0;
  std::size_t selection_size = 0;
  std::size_t false_positive_count = 0;
  double shat = 0.0;
  double bhat = 0.0;
  // NaN when bhat == 0.
  double ams = 0.0;
  double ams_simple = 0.0;
  double balanced_error = 0.0;
  double auc = 0.0;
};

nlohmann::json to_json(const EvalReport& r);

// Imputes with the model's fill values after checking feature names.
Dataset prepare_for_model(const Model& m, const Dataset& d);

std::vector<double> model_scores(const Model& m, const Dataset& prepared);

EvalReport evaluate_model(const Model& m, const Dataset& d, double percentile, const std::string& split_name);

// Writes the curve/diagnostic CSVs into dir; returns the written paths.
std::vector<std::string> write_curves(const RunConfig& cfg, const Model& m, const Dataset& d,
                                      const std::string& split_name, const std::string& dir);

struct BenchmarkEntry {
  std::string model;
  std::size_t n_trees = 0;
  std::size_t n_stages = 0;
  double seconds = 0.0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

nlohmann::json run_benchmark(const RunConfig& cfg, const Dataset& train, std::vector<BenchmarkEntry>* entries = nullptr);

// Subcommands. Each returns a process exit code and writes into cfg.output_dir.
int cmd_train(const RunConfig& cfg);
int cmd_evaluate(const RunConfig& cfg, const std::string& model_path, Provenance split);
int cmd_curves(const RunConfig& cfg, const std::string& model_path, Provenance split);
int cmd_benchmark(const RunConfig& cfg);
int cmd_summary(const RunConfig& cfg, Provenance split);

}  // namespace hepforest::run
