#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hepforest/common.hpp"
#include "hepforest/dataset.hpp"
#include "hepforest/random.hpp"

namespace hepforest {

// Rows of a feature matrix together with labels, per-row sample weights and
// optional per-row multiplicities (bootstrap counts). A row's effective weight
// is weight * multiplicity; rows with multiplicity 0 are not part of the view.
class SampleView {
 public:
  SampleView(const FeatureMatrix& x, std::span<const Label> labels, std::span<const double> weights,
             std::span<const std::uint32_t> multiplicity = {});

  std::size_t num_features() const { return x_->cols(); }
  std::size_t num_rows() const { return x_->rows(); }

  double value(std::size_t row, std::size_t feature) const { return (*x_)(row, feature); }
  Label label(std::size_t row) const { return labels_[row]; }
  std::uint32_t multiplicity(std::size_t row) const {
    return multiplicity_.empty() ? 1u : multiplicity_[row];
  }
  double weight(std::size_t row) const {
    return multiplicity_.empty() ? weights_[row] : weights_[row] * multiplicity_[row];
  }

  // Indices of rows with non-zero multiplicity, ascending.
  std::vector<std::size_t> active_rows() const;

 private:
  const FeatureMatrix* x_;
  std::span<const Label> labels_;
  std::span<const double> weights_;
  std::span<const std::uint32_t> multiplicity_;
};

struct SplitCandidate {
  std::size_t feature_index = 0;
  double threshold = 0.0;
  // Weighted Gini impurity decrease.
  double quality = 0.0;

  friend bool operator==(const SplitCandidate&, const SplitCandidate&) = default;
};

enum class SplitMode : std::uint8_t { Exhaustive, RandomK };

struct TreeConfig {
  int max_depth = 32;
  std::size_t min_samples_split = 2;
  double min_quality = 0.0;
  SplitMode split_mode = SplitMode::Exhaustive;
  // Features examined per node. Unset: every feature for Exhaustive,
  // floor(sqrt(F)) for RandomK.
  std::optional<std::size_t> k_features;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Gains closer than this are treated as ties.
inline constexpr double kGainTieTolerance = 1e-12;

// 2 p (1 - p) with p the signal weight fraction.
double gini_impurity(double weight_signal, double weight_background);

// Impurity decrease of a parent split into left/right children.
double gini_gain(double left_s, double left_b, double right_s, double right_b);

// Best midpoint split over `features` for the given rows. Returns nothing when
// no split has quality > min_quality. Ties go to the lowest feature index,
// then the lowest threshold.
std::optional<SplitCandidate> best_split_exhaustive(const SampleView& view,
                                                    std::span<const std::size_t> rows,
                                                    std::span<const std::size_t> features,
                                                    double min_quality = 0.0);

// Draws k distinct features and one uniform threshold in (min, max) for each,
// returning the best-scoring candidate. Constant features yield no candidate.
std::optional<SplitCandidate> random_split(const SampleView& view, std::span<const std::size_t> rows,
                                           std::size_t k, Rng& rng);

class DecisionTree {
 public:
  struct Node {
    // -1 for leaves.
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double w_signal = 0.0;
    double w_background = 0.0;

    bool is_leaf() const { return feature < 0; }
    friend bool operator==(const Node&, const Node&) = default;
  };

  DecisionTree() = default;
  DecisionTree(std::size_t num_features, std::vector<Node> nodes);

  std::size_t num_features() const { return num_features_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t leaf_count() const;
  int depth() const;

  // Signal weight fraction of the leaf reached by x.
  double predict_score(std::span<const double> x) const;
  Label predict_label(std::span<const double> x) const {
    return predict_score(x) > 0.5 ? Label::Signal : Label::Background;
  }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::size_t leaf_index(std::span<const double> x) const;

  std::size_t num_features_ = 0;
  std::vector<Node> nodes_;
};

DecisionTree fit_tree(const SampleView& view, const TreeConfig& cfg);

// Same as above with an externally owned generator (ensembles pass the
// per-tree stream that also drew the bootstrap).
DecisionTree fit_tree(const SampleView& view, const TreeConfig& cfg, Rng& rng);

}  // namespace hepforest
