#include "hepforest/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "hepforest/parallel.hpp"

namespace hepforest {

const char* flavor_name(EnsembleFlavor f) {
  return f == EnsembleFlavor::RandomForest ? "RandomForest" : "ExtraTrees";
}

void EnsembleConfig::validate() const {
  if (n_trees < 1) throw ConfigError("ensemble: n_trees must be >= 1");
  tree.validate();
}

std::vector<std::size_t> bootstrap_sample(std::size_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("bootstrap_sample: n must be >= 1");
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = rng.uniform_index(n);
  return out;
}

std::vector<std::uint32_t> bootstrap_counts(std::size_t n, Rng& rng) {
  std::vector<std::uint32_t> counts(n, 0);
  for (const std::size_t i : bootstrap_sample(n, rng)) ++counts[i];
  return counts;
}

EnsembleModel::EnsembleModel(EnsembleFlavor flavor, std::vector<DecisionTree> trees,
                             std::vector<std::uint64_t> tree_seeds, bool bootstrap,
                             std::size_t training_rows)
    : flavor_(flavor),
      trees_(std::move(trees)),
      tree_seeds_(std::move(tree_seeds)),
      bootstrap_(bootstrap),
      training_rows_(training_rows) {
  if (trees_.empty()) throw std::invalid_argument("EnsembleModel: no trees");
  if (tree_seeds_.size() != trees_.size())
    throw std::invalid_argument("EnsembleModel: one seed per tree required");
  for (const auto& t : trees_)
    if (t.num_features() != trees_.front().num_features())
      throw std::invalid_argument("EnsembleModel: trees disagree on feature count");
}

std::vector<std::uint32_t> EnsembleModel::inbag_counts(std::size_t t) const {
  if (t >= trees_.size()) throw std::out_of_range("inbag_counts: tree index");
  if (!bootstrap_) return std::vector<std::uint32_t>(training_rows_, 1u);
  Rng rng(tree_seeds_[t]);
  return bootstrap_counts(training_rows_, rng);
}

double EnsembleModel::score(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& t : trees_) sum += t.predict_score(x);
  return sum / static_cast<double>(trees_.size());
}

TreeConfig resolve_tree_config(const EnsembleConfig& cfg, std::size_t num_features) {
  TreeConfig tc = cfg.tree;
  tc.split_mode = cfg.flavor == EnsembleFlavor::RandomForest ? SplitMode::Exhaustive : SplitMode::RandomK;
  if (!tc.k_features)
    tc.k_features = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(num_features))));
  return tc;
}

EnsembleModel fit_ensemble(const Dataset& d, std::span<const double> sample_weights,
                           const EnsembleConfig& cfg, unsigned workers) {
  cfg.validate();
  if (d.empty()) throw std::invalid_argument("fit_ensemble: empty dataset");
  if (sample_weights.size() != d.size())
    throw std::invalid_argument("fit_ensemble: one sample weight per event required");
  const TreeConfig tc = resolve_tree_config(cfg, d.num_features());

  std::vector<DecisionTree> trees(cfg.n_trees);
  std::vector<std::uint64_t> seeds(cfg.n_trees);
  for (std::size_t t = 0; t < cfg.n_trees; ++t) seeds[t] = derive_seed(cfg.rng_seed, t);

  parallel_for(cfg.n_trees, workers, [&](std::size_t t) {
    Rng rng(seeds[t]);
    std::vector<std::uint32_t> counts;
    if (cfg.bootstrap) counts = bootstrap_counts(d.size(), rng);
    const SampleView view(d.features(), d.labels(), sample_weights, counts);
    trees[t] = fit_tree(view, tc, rng);
  });
  return EnsembleModel(cfg.flavor, std::move(trees), std::move(seeds), cfg.bootstrap, d.size());
}

double ensemble_score(const EnsembleModel& m, std::span<const double> x) { return m.score(x); }

double oob_error(const EnsembleModel& m, const Dataset& d, const BalancedWeights& balanced) {
  if (!m.bootstrap()) throw std::invalid_argument("oob_error: model was trained without bootstrap");
  if (d.size() != m.training_rows())
    throw std::invalid_argument("oob_error: dataset is not the training set of this model");
  if (balanced.weights.size() != d.size())
    throw std::invalid_argument("oob_error: balanced weights length mismatch");

  std::vector<double> score_sum(d.size(), 0.0);
  std::vector<std::uint32_t> oob_trees(d.size(), 0);
  for (std::size_t t = 0; t < m.size(); ++t) {
    const auto counts = m.inbag_counts(t);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (counts[i] != 0) continue;
      score_sum[i] += m.trees()[t].predict_score(d.features().row(i));
      ++oob_trees[i];
    }
  }
  double covered = 0.0;
  double wrong = 0.0;
  std::size_t covered_rows = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (oob_trees[i] == 0) continue;
    ++covered_rows;
    const double s = score_sum[i] / static_cast<double>(oob_trees[i]);
    const Label predicted = s > 0.5 ? Label::Signal : Label::Background;
    covered += balanced.weights[i];
    if (predicted != d.labels()[i]) wrong += balanced.weights[i];
  }
  if (covered_rows == 0) throw std::runtime_error("oob_error: no event has an out-of-bag tree");
  if (!(covered > 0.0)) throw std::runtime_error("oob_error: out-of-bag events carry zero weight");
  return wrong / covered;
}

std::vector<std::vector<double>> per_tree_scores(const EnsembleModel& m, const Dataset& d,
                                                 std::span<const std::size_t> trees) {
  std::vector<std::vector<double>> out;
  out.reserve(trees.size());
  for (const std::size_t t : trees) {
    if (t >= m.size()) throw std::out_of_range("per_tree_scores: tree index");
    std::vector<double> s(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) s[i] = m.trees()[t].predict_score(d.features().row(i));
    out.push_back(std::move(s));
  }
  return out;
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("pearson_correlation: length mismatch");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<std::vector<double>> tree_correlation_matrix(const EnsembleModel& m, const Dataset& d,
                                                         std::span<const std::size_t> subset) {
  if (m.size() < 2) throw std::invalid_argument("tree_correlation_matrix: needs at least two trees");
  if (d.empty()) throw std::invalid_argument("tree_correlation_matrix: empty dataset");
  std::vector<std::size_t> chosen(subset.begin(), subset.end());
  if (chosen.empty()) {
    chosen.resize(std::min<std::size_t>(100, m.size()));
    std::iota(chosen.begin(), chosen.end(), std::size_t{0});
  }
  if (chosen.size() > 100) throw std::invalid_argument("tree_correlation_matrix: at most 100 trees");
  const auto scores = per_tree_scores(m, d, chosen);
  const std::size_t k = chosen.size();
  std::vector<std::vector<double>> corr(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    corr[i][i] = 1.0;
    for (std::size_t j = i + 1; j < k; ++j) corr[i][j] = corr[j][i] = pearson_correlation(scores[i], scores[j]);
  }
  return corr;
}

double mean_off_diagonal(const std::vector<std::vector<double>>& matrix) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < matrix.size(); ++i)
    for (std::size_t j = 0; j < matrix.size(); ++j)
      if (i != j) {
        sum += matrix[i][j];
        ++count;
      }
  return count ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace hepforest
