#include "hepforest/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hepforest {

SampleView::SampleView(const FeatureMatrix& x, std::span<const Label> labels,
                       std::span<const double> weights, std::span<const std::uint32_t> multiplicity)
    : x_(&x), labels_(labels), weights_(weights), multiplicity_(multiplicity) {
  if (labels.size() != x.rows() || weights.size() != x.rows())
    throw std::invalid_argument("SampleView: labels/weights length must equal row count");
  if (!multiplicity.empty() && multiplicity.size() != x.rows())
    throw std::invalid_argument("SampleView: multiplicity length must equal row count");
}

std::vector<std::size_t> SampleView::active_rows() const {
  std::vector<std::size_t> rows;
  rows.reserve(num_rows());
  for (std::size_t r = 0; r < num_rows(); ++r)
    if (multiplicity(r) > 0) rows.push_back(r);
  return rows;
}

void TreeConfig::validate() const {
  if (max_depth < 1) throw ConfigError("tree: max_depth must be >= 1");
  if (min_samples_split < 2) throw ConfigError("tree: min_samples_split must be >= 2");
  if (!(min_quality >= 0.0)) throw ConfigError("tree: min_quality must be >= 0");
  if (k_features && *k_features < 1) throw ConfigError("tree: k_features must be >= 1");
}

double gini_impurity(double weight_signal, double weight_background) {
  if (weight_signal < 0.0 || weight_background < 0.0)
    throw std::invalid_argument("gini_impurity: negative weight");
  const double total = weight_signal + weight_background;
  if (!(total > 0.0)) throw std::invalid_argument("gini_impurity: zero total weight");
  const double p = weight_signal / total;
  return 2.0 * p * (1.0 - p);
}

double gini_gain(double left_s, double left_b, double right_s, double right_b) {
  const double wl = left_s + left_b;
  const double wr = right_s + right_b;
  const double w = wl + wr;
  const double gain = gini_impurity(left_s + right_s, left_b + right_b) -
                      (wl * gini_impurity(left_s, left_b) + wr * gini_impurity(right_s, right_b)) / w;
  return std::max(0.0, gain);
}

namespace {

struct ClassWeights {
  double s = 0.0;
  double b = 0.0;
  std::size_t count = 0;
};

ClassWeights totals(const SampleView& view, std::span<const std::size_t> rows) {
  ClassWeights t;
  for (const std::size_t r : rows) {
    const double w = view.weight(r);
    if (is_signal(view.label(r)))
      t.s += w;
    else
      t.b += w;
    t.count += view.multiplicity(r);
  }
  return t;
}

// Midpoint strictly below `hi` so that x <= threshold separates lo from hi.
double midpoint(double lo, double hi) {
  const double t = lo + (hi - lo) / 2.0;
  return t < hi ? t : lo;
}

struct SortedEntry {
  double value;
  std::size_t row;
};

// Adopts `cand` when it beats `best` by more than the tie tolerance.
bool improves(const std::optional<SplitCandidate>& best, double quality) {
  return !best || quality > best->quality + kGainTieTolerance;
}

std::optional<SplitCandidate> random_split_with_totals(const SampleView& view,
                                                       std::span<const std::size_t> rows,
                                                       std::size_t k, Rng& rng,
                                                       const ClassWeights& parent);

}  // namespace

std::optional<SplitCandidate> best_split_exhaustive(const SampleView& view,
                                                    std::span<const std::size_t> rows,
                                                    std::span<const std::size_t> features,
                                                    double min_quality) {
  if (rows.empty()) throw std::invalid_argument("best_split_exhaustive: no rows");
  if (features.empty()) throw std::invalid_argument("best_split_exhaustive: no candidate features");

  std::vector<std::size_t> ordered(features.begin(), features.end());
  std::sort(ordered.begin(), ordered.end());
  ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());

  const ClassWeights parent = totals(view, rows);
  if (!(parent.s + parent.b > 0.0)) return std::nullopt;

  std::optional<SplitCandidate> best;
  std::vector<SortedEntry> entries(rows.size());
  for (const std::size_t f : ordered) {
    if (f >= view.num_features()) throw std::out_of_range("best_split_exhaustive: feature index");
    for (std::size_t i = 0; i < rows.size(); ++i) entries[i] = {view.value(rows[i], f), rows[i]};
    std::sort(entries.begin(), entries.end(), [](const SortedEntry& a, const SortedEntry& b) {
      return a.value < b.value || (a.value == b.value && a.row < b.row);
    });

    double left_s = 0.0;
    double left_b = 0.0;
    for (std::size_t i = 0; i + 1 < entries.size(); ++i) {
      const double w = view.weight(entries[i].row);
      if (is_signal(view.label(entries[i].row)))
        left_s += w;
      else
        left_b += w;
      if (entries[i].value == entries[i + 1].value) continue;

      const double right_s = parent.s - left_s;
      const double right_b = parent.b - left_b;
      if (!(left_s + left_b > 0.0) || !(right_s + right_b > 0.0)) continue;
      const double q = gini_gain(left_s, left_b, std::max(0.0, right_s), std::max(0.0, right_b));
      if (q > min_quality && improves(best, q))
        best = SplitCandidate{f, midpoint(entries[i].value, entries[i + 1].value), q};
    }
  }
  return best;
}

std::optional<SplitCandidate> random_split(const SampleView& view, std::span<const std::size_t> rows,
                                           std::size_t k, Rng& rng) {
  if (rows.empty()) throw std::invalid_argument("random_split: no rows");
  if (k < 1 || k > view.num_features()) throw std::invalid_argument("random_split: K must be in [1, F]");
  return random_split_with_totals(view, rows, k, rng, totals(view, rows));
}

namespace {

// First k entries of a partial Fisher-Yates shuffle of [0, n), sorted.
std::vector<std::size_t> sample_features(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.uniform_index(n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::optional<SplitCandidate> random_split_with_totals(const SampleView& view,
                                                       std::span<const std::size_t> rows,
                                                       std::size_t k, Rng& rng,
                                                       const ClassWeights& parent) {
  const auto features = sample_features(view.num_features(), k, rng);
  std::optional<SplitCandidate> best;
  for (const std::size_t f : features) {
    double lo = view.value(rows[0], f);
    double hi = lo;
    for (const std::size_t r : rows) {
      const double v = view.value(r, f);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(lo < hi)) continue;
    const double threshold = rng.uniform_open(lo, hi);

    double left_s = 0.0;
    double left_b = 0.0;
    for (const std::size_t r : rows) {
      if (view.value(r, f) > threshold) continue;
      if (is_signal(view.label(r)))
        left_s += view.weight(r);
      else
        left_b += view.weight(r);
    }
    const double right_s = parent.s - left_s;
    const double right_b = parent.b - left_b;
    if (!(left_s + left_b > 0.0) || !(right_s + right_b > 0.0)) continue;
    const double q = gini_gain(left_s, left_b, std::max(0.0, right_s), std::max(0.0, right_b));
    if (improves(best, q)) best = SplitCandidate{f, threshold, q};
  }
  return best;
}

}  // namespace

DecisionTree::DecisionTree(std::size_t num_features, std::vector<Node> nodes)
    : num_features_(num_features), nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw std::invalid_argument("DecisionTree: no nodes");
  for (const auto& n : nodes_) {
    if (n.is_leaf()) continue;
    if (static_cast<std::size_t>(n.feature) >= num_features_ || n.left <= 0 || n.right <= 0 ||
        static_cast<std::size_t>(n.left) >= nodes_.size() ||
        static_cast<std::size_t>(n.right) >= nodes_.size())
      throw std::invalid_argument("DecisionTree: malformed node");
  }
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

int DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<int> level(nodes_.size(), 0);
  int deepest = 0;
  // Children are always stored after their parent.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    deepest = std::max(deepest, level[i]);
    if (n.is_leaf()) continue;
    level[static_cast<std::size_t>(n.left)] = level[i] + 1;
    level[static_cast<std::size_t>(n.right)] = level[i] + 1;
  }
  return deepest;
}

std::size_t DecisionTree::leaf_index(std::span<const double> x) const {
  if (x.size() != num_features_) throw std::invalid_argument("predict: feature vector dimension mismatch");
  if (nodes_.empty()) throw std::logic_error("predict: empty tree");
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return i;
}

double DecisionTree::predict_score(std::span<const double> x) const {
  const auto& leaf = nodes_[leaf_index(x)];
  const double total = leaf.w_signal + leaf.w_background;
  return total > 0.0 ? leaf.w_signal / total : 0.0;
}

DecisionTree fit_tree(const SampleView& view, const TreeConfig& cfg) {
  Rng rng(cfg.rng_seed);
  return fit_tree(view, cfg, rng);
}

DecisionTree fit_tree(const SampleView& view, const TreeConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t num_features = view.num_features();
  if (num_features == 0) throw std::invalid_argument("fit_tree: no features");
  std::vector<std::size_t> rows = view.active_rows();
  if (rows.empty()) throw std::invalid_argument("fit_tree: no rows");
  const ClassWeights root = totals(view, rows);
  if (!(root.s + root.b > 0.0)) throw std::invalid_argument("fit_tree: zero total weight");

  const std::size_t k = std::min(
      num_features,
      cfg.k_features.value_or(cfg.split_mode == SplitMode::Exhaustive
                                  ? num_features
                                  : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(
                                                                 static_cast<double>(num_features))))));
  std::vector<std::size_t> all_features(num_features);
  std::iota(all_features.begin(), all_features.end(), std::size_t{0});

  struct Pending {
    std::size_t node;
    std::size_t begin;
    std::size_t end;
    int depth;
    ClassWeights weights;
  };

  std::vector<DecisionTree::Node> nodes;
  nodes.push_back({-1, 0.0, -1, -1, root.s, root.b});
  std::vector<Pending> stack{{0, 0, rows.size(), 0, root}};

  while (!stack.empty()) {
    const Pending cur = stack.back();
    stack.pop_back();
    const std::span<const std::size_t> node_rows(rows.data() + cur.begin, cur.end - cur.begin);

    const bool pure = cur.weights.s == 0.0 || cur.weights.b == 0.0;
    if (pure || cur.depth >= cfg.max_depth || cur.weights.count < cfg.min_samples_split) continue;

    std::optional<SplitCandidate> split;
    if (cfg.split_mode == SplitMode::Exhaustive) {
      if (k >= num_features) {
        split = best_split_exhaustive(view, node_rows, all_features, cfg.min_quality);
      } else {
        const auto subset = sample_features(num_features, k, rng);
        split = best_split_exhaustive(view, node_rows, subset, cfg.min_quality);
      }
    } else {
      split = random_split_with_totals(view, node_rows, k, rng, cur.weights);
    }
    if (!split || !(split->quality > cfg.min_quality)) continue;

    const auto first = rows.begin() + static_cast<std::ptrdiff_t>(cur.begin);
    const auto last = rows.begin() + static_cast<std::ptrdiff_t>(cur.end);
    const auto mid = std::stable_partition(first, last, [&](std::size_t r) {
      return view.value(r, split->feature_index) <= split->threshold;
    });
    const std::size_t mid_pos = static_cast<std::size_t>(mid - rows.begin());
    const ClassWeights left = totals(view, {rows.data() + cur.begin, mid_pos - cur.begin});
    const ClassWeights right = totals(view, {rows.data() + mid_pos, cur.end - mid_pos});

    const auto left_id = static_cast<std::int32_t>(nodes.size());
    nodes.push_back({-1, 0.0, -1, -1, left.s, left.b});
    const auto right_id = static_cast<std::int32_t>(nodes.size());
    nodes.push_back({-1, 0.0, -1, -1, right.s, right.b});
    auto& parent = nodes[cur.node];
    parent.feature = static_cast<std::int32_t>(split->feature_index);
    parent.threshold = split->threshold;
    parent.left = left_id;
    parent.right = right_id;

    // Right pushed first so the left subtree is expanded first.
    stack.push_back({static_cast<std::size_t>(right_id), mid_pos, cur.end, cur.depth + 1, right});
    stack.push_back({static_cast<std::size_t>(left_id), cur.begin, mid_pos, cur.depth + 1, left});
  }
  return DecisionTree(num_features, std::move(nodes));
}

}  // namespace hepforest
