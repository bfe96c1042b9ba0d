#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hepforest/dataset.hpp"
#include "hepforest/ensemble.hpp"
#include "hepforest/tree.hpp"

namespace hepforest {

enum class InitWeights : std::uint8_t { Uniform, Balanced };

using BaseConfig = std::variant<TreeConfig, EnsembleConfig>;
using BaseModel = std::variant<DecisionTree, EnsembleModel>;

// Probability-like score in [0, 1] of a base learner.
double base_score(const BaseModel& m, std::span<const double> x);

// +1 when the base score exceeds 0.5, otherwise -1.
int base_vote(const BaseModel& m, std::span<const double> x);

struct BoostConfig {
  std::size_t n_stages = 20;
  BaseConfig base = EnsembleConfig{};
  InitWeights init_weights = InitWeights::Balanced;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Error floor used to cap alpha for a perfect stage.
inline constexpr double kPerfectStageErrorFloor = 1e-6;

// Weighted misclassification rate. Weights must sum to 1 within 1e-9.
double stage_error(std::span<const int> predictions, std::span<const int> labels,
                   std::span<const double> boost_weights);

enum class StageOutcome : std::uint8_t {
  Accept,
  // Perfect stage: kept with a capped alpha, boosting ends.
  AcceptAndStop,
  // No better than chance: discarded, boosting ends.
  Reject,
};

StageOutcome classify_stage_error(double eps);

// 1/2 ln((1 - eps) / eps). eps <= 0 is capped at kPerfectStageErrorFloor;
// eps >= 0.5 throws std::domain_error.
double alpha_from_error(double eps);

// Multiplies misclassified weights by exp(2 alpha), then renormalizes to 1.
// Equivalent to scaling misses by exp(alpha) and hits by exp(-alpha).
std::vector<double> update_weights(std::span<const double> boost_weights, std::span<const int> predictions,
                                   std::span<const int> labels, double alpha);

struct BoostStage {
  BaseModel model;
  double alpha = 0.0;
  double error = 0.0;

  friend bool operator==(const BoostStage&, const BoostStage&) = default;
};

class BoostedModel {
 public:
  BoostedModel() = default;
  BoostedModel(std::vector<BoostStage> stages, BoostConfig config);

  const std::vector<BoostStage>& stages() const { return stages_; }
  std::size_t size() const { return stages_.size(); }
  const BoostConfig& config() const { return config_; }
  std::size_t num_features() const;

  // Normalized master vote sum_{m<=k} alpha_m h_m(x) / sum_{m<=k} alpha_m in
  // [-1, 1]; k = number of stages when upto_stage is unset.
  double score(std::span<const double> x, std::optional<std::size_t> upto_stage = std::nullopt) const;
  Label predict(std::span<const double> x) const {
    return score(x) > 0.0 ? Label::Signal : Label::Background;
  }

  friend bool operator==(const BoostedModel& a, const BoostedModel& b) { return a.stages_ == b.stages_; }

 private:
  std::vector<BoostStage> stages_;
  BoostConfig config_;
};

struct StageTrace {
  std::size_t stage = 0;
  double error = 0.0;
  double alpha = 0.0;
  StageOutcome outcome = StageOutcome::Accept;
  double seconds = 0.0;
  // Error of the master vote so far, under the initial boost weights.
  double master_error = 0.0;
};

BoostedModel fit_boosted(const Dataset& d, const BalancedWeights& balanced, const BoostConfig& cfg,
                         unsigned workers = 1, std::vector<StageTrace>* trace = nullptr);

double boosted_score(const BoostedModel& m, std::span<const double> x,
                     std::optional<std::size_t> upto_stage = std::nullopt);

// Per-stage votes h_m(x_i) for every event (row = stage).
std::vector<std::vector<int>> stage_votes(const BoostedModel& m, const Dataset& d);

// Master scores of every event using the first k stages, for k = 1..M.
std::vector<std::vector<double>> staged_scores(const BoostedModel& m, const Dataset& d);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count_s = 0;
  std::size_t count_b = 0;
  double wsum_s = 0.0;
  double wsum_b = 0.0;
};

struct StageDiagnostics {
  std::size_t stage = 0;  // 1-based
  std::vector<HistogramBin> histogram;
  double threshold = 0.0;
  std::size_t selected = 0;
  std::size_t fp_count = 0;
  double fp_wsum = 0.0;
};

// Equal-width histogram of the scores on [lo, hi]; hi falls in the last bin.
std::vector<HistogramBin> score_histogram(std::span<const double> scores, std::span<const Label> labels,
                                          std::span<const double> weights, std::size_t bins, double lo,
                                          double hi);

// False positives are background events scoring strictly above the
// `percentile` threshold of that stage's scores.
std::vector<StageDiagnostics> staged_diagnostics(const BoostedModel& m, const Dataset& d, double percentile,
                                                 std::size_t bins = 20);

}  // namespace hepforest
