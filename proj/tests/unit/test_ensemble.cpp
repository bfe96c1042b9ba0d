#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include "hepforest/ensemble.hpp"
#include "hepforest/parallel.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace hepforest;

namespace {

DecisionTree constant_tree(double s, double b, std::size_t f = 2) { return DecisionTree(f, {DecisionTree::Node{-1, 0.0, -1, -1, s, b}}); }

}  // namespace

TEST_CASE("bootstrap_sample") {
  Rng one(3);
  CHECK(bootstrap_sample(1, one) == std::vector<std::size_t>{0});

  Rng a(11), b(11);
  CHECK(bootstrap_sample(500, a) == bootstrap_sample(500, b));

  Rng c(12), d(12);
  const auto idx = bootstrap_sample(300, c);
  const auto counts = bootstrap_counts(300, d);
  std::vector<std::uint32_t> folded(300, 0);
  for (auto i : idx) ++folded[i];
  CHECK(folded == counts);
  CHECK(std::accumulate(counts.begin(), counts.end(), 0u) == 300u);
}

TEST_CASE("bootstrap unique fraction is about 63.2%") {
  const std::size_t n = 10000;
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(derive_seed(2024, seed));
    const auto s = bootstrap_sample(n, rng);
    total += static_cast<double>(std::set<std::size_t>(s.begin(), s.end()).size()) / n;
  }
  CHECK(std::abs(total / 20 - 0.632) <= 0.015);
}

TEST_CASE("bootstrap index frequencies pass a chi-square uniformity test") {
  const std::size_t n = 1000;
  std::vector<double> freq(n, 0.0);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(derive_seed(77, seed));
    for (auto i : bootstrap_sample(n, rng)) freq[i] += 1.0;
  }
  const double expected = 100.0;
  double chi2 = 0.0;
  for (double f : freq) chi2 += (f - expected) * (f - expected) / expected;
  // Wilson-Hilferty: (chi2/k)^(1/3) is approximately normal.
  const double k = static_cast<double>(n - 1);
  const double z = (std::cbrt(chi2 / k) - (1 - 2 / (9 * k))) / std::sqrt(2 / (9 * k));
  const double p = 0.5 * std::erfc(z / std::sqrt(2.0));
  CHECK(p > 0.01);
}

TEST_CASE("single-tree ensemble without bootstrap equals fit_tree") {
  const Dataset d = synthetic::overlapping_gaussians(200, 3, 1.0, 5);
  EnsembleConfig cfg;
  cfg.n_trees = 1;
  cfg.bootstrap = false;
  cfg.tree.k_features = 3;
  const auto m = fit_ensemble(d, d.weights(), cfg);
  const auto tree = fit_tree(SampleView(d.features(), d.labels(), d.weights()), TreeConfig{});
  REQUIRE(m.size() == 1);
  CHECK(m.trees()[0] == tree);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(m.score(d.features().row(i)) == tree.predict_score(d.features().row(i)));
}

TEST_CASE("fit_ensemble is deterministic and independent of worker count") {
  const Dataset d = synthetic::overlapping_gaussians(300, 4, 1.0, 6);
  for (auto flavor : {EnsembleFlavor::RandomForest, EnsembleFlavor::ExtraTrees}) {
    EnsembleConfig cfg;
    cfg.n_trees = 12;
    cfg.flavor = flavor;
    cfg.rng_seed = 99;
    const auto a = fit_ensemble(d, d.weights(), cfg, 1);
    const auto b = fit_ensemble(d, d.weights(), cfg, 1);
    const auto c = fit_ensemble(d, d.weights(), cfg, 4);
    CHECK(a == b);
    CHECK(a == c);
    CHECK(a.size() == 12);
    for (std::size_t t = 0; t < a.size(); ++t) {
      const auto counts = a.inbag_counts(t);
      CHECK(std::accumulate(counts.begin(), counts.end(), 0u) == d.size());
    }
    cfg.rng_seed = 100;
    CHECK_FALSE(fit_ensemble(d, d.weights(), cfg, 2) == a);
  }
}

TEST_CASE("ensemble_score is the mean of tree scores") {
  const EnsembleModel pure(EnsembleFlavor::RandomForest, {constant_tree(1, 0), constant_tree(3, 0)}, {1, 2}, false, 0);
  CHECK(pure.score(std::vector<double>{0, 0}) == 1.0);

  const EnsembleModel two(EnsembleFlavor::RandomForest, {constant_tree(1, 4), constant_tree(3, 2)}, {1, 2}, false, 0);
  CHECK(two.score(std::vector<double>{0, 0}) == doctest::Approx(0.4).epsilon(1e-15));

  const Dataset d = synthetic::overlapping_gaussians(150, 2, 1.0, 8);
  EnsembleConfig cfg;
  cfg.n_trees = 5;
  cfg.flavor = EnsembleFlavor::ExtraTrees;
  cfg.tree.max_depth = 4;
  const auto m = fit_ensemble(d, d.weights(), cfg);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto x = d.features().row(i);
    double sum = 0.0;
    for (const auto& t : m.trees()) sum += t.predict_score(x);
    const double s = ensemble_score(m, x);
    CHECK(s == doctest::Approx(sum / 5).epsilon(1e-15));
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }

  // Permuting trees leaves the score unchanged.
  auto trees = m.trees();
  auto seeds = m.tree_seeds();
  std::reverse(trees.begin(), trees.end());
  std::reverse(seeds.begin(), seeds.end());
  const EnsembleModel reversed(m.flavor(), trees, seeds, m.bootstrap(), m.training_rows());
  for (std::size_t i = 0; i < d.size(); ++i)
    CHECK(reversed.score(d.features().row(i)) == doctest::Approx(m.score(d.features().row(i))).epsilon(1e-15));

  CHECK_THROWS(m.score(std::vector<double>{1.0}));
}

TEST_CASE("oob_error matches direct enumeration") {
  const Dataset d = synthetic::overlapping_gaussians(30, 2, 1.5, 10);
  const auto balanced = rebalance_weights(d);
  EnsembleConfig cfg;
  cfg.n_trees = 10;
  cfg.rng_seed = 4;
  const auto m = fit_ensemble(d, balanced.weights, cfg);

  std::vector<double> sum(d.size(), 0.0);
  std::vector<int> cnt(d.size(), 0);
  for (std::size_t t = 0; t < m.size(); ++t) {
    Rng rng(m.tree_seeds()[t]);
    const auto inbag = bootstrap_sample(d.size(), rng);
    const std::set<std::size_t> in(inbag.begin(), inbag.end());
    for (std::size_t i = 0; i < d.size(); ++i)
      if (!in.count(i)) {
        sum[i] += m.trees()[t].predict_score(d.features().row(i));
        ++cnt[i];
      }
  }
  double wrong = 0, covered = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!cnt[i]) continue;
    covered += balanced.weights[i];
    const bool sig = sum[i] / cnt[i] > 0.5;
    if (sig != is_signal(d.labels()[i])) wrong += balanced.weights[i];
  }
  CHECK(oob_error(m, d, balanced) == doctest::Approx(wrong / covered).epsilon(1e-14));
}

TEST_CASE("oob_error error paths and separable limit") {
  const Dataset d = synthetic::overlapping_gaussians(200, 2, 8.0, 12);
  const auto balanced = rebalance_weights(d);
  EnsembleConfig cfg;
  cfg.n_trees = 50;
  const auto m = fit_ensemble(d, balanced.weights, cfg, 2);
  CHECK(oob_error(m, d, balanced) < 0.02);

  cfg.bootstrap = false;
  cfg.n_trees = 2;
  CHECK_THROWS_AS(oob_error(fit_ensemble(d, balanced.weights, cfg), d, balanced), std::invalid_argument);

  // A single row always lands in its own bootstrap.
  Dataset one(std::vector<std::string>{"x"});
  one.add(0, std::vector<double>{1.0}, 1.0, Label::Signal);
  EnsembleConfig single;
  single.n_trees = 1;
  const auto lone = fit_ensemble(one, one.weights(), single);
  CHECK_THROWS_AS(oob_error(lone, one, BalancedWeights{{1.0}}), std::runtime_error);
}

TEST_CASE("tree_correlation_matrix") {
  const Dataset d = synthetic::overlapping_gaussians(120, 3, 1.0, 13);
  EnsembleConfig cfg;
  cfg.n_trees = 3;
  cfg.tree.max_depth = 5;
  const auto m = fit_ensemble(d, d.weights(), cfg);
  const auto corr = tree_correlation_matrix(m, d);
  REQUIRE(corr.size() == 3);
  const std::vector<std::size_t> all = {0, 1, 2};
  const auto scores = per_tree_scores(m, d, all);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(corr[i][i] == 1.0);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(corr[i][j] == corr[j][i]);
      if (i != j) CHECK(corr[i][j] == doctest::Approx(oracle::pearson(scores[i], scores[j])).epsilon(1e-12));
    }
  }

  const EnsembleModel dup(EnsembleFlavor::RandomForest, {m.trees()[0], m.trees()[0]}, {1, 1}, true, d.size());
  CHECK(tree_correlation_matrix(dup, d)[0][1] == doctest::Approx(1.0).epsilon(1e-14));

  const EnsembleModel flat(EnsembleFlavor::RandomForest, {m.trees()[0], constant_tree(1, 1, 3)}, {1, 2}, true, d.size());
  const auto c = tree_correlation_matrix(flat, d);
  CHECK(c[0][1] == 0.0);
  CHECK(c[1][1] == 1.0);

  const EnsembleModel lone(EnsembleFlavor::RandomForest, {m.trees()[0]}, {1}, true, d.size());
  CHECK_THROWS_AS(tree_correlation_matrix(lone, d), std::invalid_argument);
}

TEST_CASE("pearson_correlation against the textbook formula") {
  const std::vector<double> a = {1, 2, 3, 4, 5.5};
  const std::vector<double> b = {2, 1, 4, 3, 7};
  CHECK(pearson_correlation(a, b) == doctest::Approx(oracle::pearson(a, b)).epsilon(1e-14));
  const std::vector<double> flat(5, 2.0);
  CHECK(pearson_correlation(a, flat) == 0.0);
  CHECK(mean_off_diagonal({{1, 0.5}, {0.5, 1}}) == 0.5);
}

TEST_CASE("resolve_tree_config picks split mode and K by flavor") {
  EnsembleConfig cfg;
  cfg.flavor = EnsembleFlavor::RandomForest;
  auto rf = resolve_tree_config(cfg, 30);
  CHECK(rf.split_mode == SplitMode::Exhaustive);
  CHECK(rf.k_features.value() == 5);
  cfg.flavor = EnsembleFlavor::ExtraTrees;
  auto et = resolve_tree_config(cfg, 30);
  CHECK(et.split_mode == SplitMode::RandomK);
  CHECK(et.k_features.value() == 5);
  cfg.tree.k_features = 7;
  CHECK(resolve_tree_config(cfg, 30).k_features.value() == 7);
}

TEST_CASE("parallel_for visits every index once and propagates exceptions") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t i) {
                                 if (i == 7) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
  CHECK(resolve_workers(0) >= 1);
  CHECK(resolve_workers(3) == 3);
}
