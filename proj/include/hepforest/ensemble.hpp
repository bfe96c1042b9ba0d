#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hepforest/dataset.hpp"
#include "hepforest/random.hpp"
#include "hepforest/tree.hpp"

namespace hepforest {

enum class EnsembleFlavor : std::uint8_t { RandomForest, ExtraTrees };

const char* flavor_name(EnsembleFlavor f);

struct EnsembleConfig {
  std::size_t n_trees = 100;
  EnsembleFlavor flavor = EnsembleFlavor::RandomForest;
  // split_mode is set by the flavor; rng_seed is replaced by per-tree seeds.
  TreeConfig tree;
  bool bootstrap = true;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// n indices drawn uniformly with replacement from [0, n).
std::vector<std::size_t> bootstrap_sample(std::size_t n, Rng& rng);

// Same draw folded into per-row multiplicities.
std::vector<std::uint32_t> bootstrap_counts(std::size_t n, Rng& rng);

class EnsembleModel {
 public:
  EnsembleModel() = default;
  EnsembleModel(EnsembleFlavor flavor, std::vector<DecisionTree> trees,
                std::vector<std::uint64_t> tree_seeds, bool bootstrap, std::size_t training_rows);

  EnsembleFlavor flavor() const { return flavor_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }
  std::size_t size() const { return trees_.size(); }
  const std::vector<std::uint64_t>& tree_seeds() const { return tree_seeds_; }
  bool bootstrap() const { return bootstrap_; }
  std::size_t training_rows() const { return training_rows_; }
  std::size_t num_features() const { return trees_.empty() ? 0 : trees_.front().num_features(); }

  // In-bag multiplicity of every training row for tree t, regenerated from
  // the tree's seed. All ones when bootstrap is off.
  std::vector<std::uint32_t> inbag_counts(std::size_t t) const;

  // Mean of the per-tree scores.
  double score(std::span<const double> x) const;

  friend bool operator==(const EnsembleModel&, const EnsembleModel&) = default;

 private:
  EnsembleFlavor flavor_ = EnsembleFlavor::RandomForest;
  std::vector<DecisionTree> trees_;
  std::vector<std::uint64_t> tree_seeds_;
  bool bootstrap_ = true;
  std::size_t training_rows_ = 0;
};

// Tree config actually used by the ensemble for F features.
TreeConfig resolve_tree_config(const EnsembleConfig& cfg, std::size_t num_features);

// Trains cfg.n_trees trees. Tree t uses the stream derive_seed(cfg.rng_seed, t)
// for its bootstrap and its splits, so the result does not depend on `workers`.
EnsembleModel fit_ensemble(const Dataset& d, std::span<const double> sample_weights,
                           const EnsembleConfig& cfg, unsigned workers = 1);

double ensemble_score(const EnsembleModel& m, std::span<const double> x);

// Balanced-weight error of out-of-bag predictions over rows covered by at
// least one out-of-bag tree.
double oob_error(const EnsembleModel& m, const Dataset& d, const BalancedWeights& balanced);

// Per-tree score vectors over d for the selected trees (row = tree).
std::vector<std::vector<double>> per_tree_scores(const EnsembleModel& m, const Dataset& d,
                                                 std::span<const std::size_t> trees);

// Pearson correlation of per-tree scores over d. Subset defaults to the first
// min(100, M) trees. Constant score vectors correlate 0 with everything else.
std::vector<std::vector<double>> tree_correlation_matrix(const EnsembleModel& m, const Dataset& d,
                                                         std::span<const std::size_t> subset = {});

double pearson_correlation(std::span<const double> a, std::span<const double> b);

// Mean of the off-diagonal entries.
double mean_off_diagonal(const std::vector<std::vector<double>>& matrix);

}  // namespace hepforest
