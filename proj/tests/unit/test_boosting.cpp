#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "hepforest/boosting.hpp"
#include "hepforest/metrics.hpp"
#include "support/synthetic.hpp"

using namespace hepforest;

namespace {

DecisionTree leaf(double s, double b) { return DecisionTree(1, {DecisionTree::Node{-1, 0.0, -1, -1, s, b}}); }

// Stump voting +1 above the threshold.
DecisionTree stump(double threshold) {
  return DecisionTree(1, {DecisionTree::Node{0, threshold, 1, 2, 1.0, 1.0}, DecisionTree::Node{-1, 0.0, -1, -1, 0.0, 1.0},
                          DecisionTree::Node{-1, 0.0, -1, -1, 1.0, 0.0}});
}

std::vector<int> signs(const Dataset& d) {
  std::vector<int> y;
  for (auto l : d.labels()) y.push_back(to_sign(l));
  return y;
}

}  // namespace

TEST_CASE("stage_error") {
  const std::vector<double> w = {0.4, 0.3, 0.2, 0.1};
  const std::vector<int> y = {1, -1, 1, -1};
  CHECK(stage_error(y, y, w) == 0.0);
  const std::vector<int> flipped = {-1, 1, -1, 1};
  CHECK(stage_error(flipped, y, w) == doctest::Approx(1.0).epsilon(1e-15));
  const std::vector<int> first_two = {-1, 1, 1, -1};
  CHECK(stage_error(first_two, y, w) == doctest::Approx(0.7).epsilon(1e-15));

  const std::vector<int> short_y = {1};
  CHECK_THROWS_AS(stage_error(short_y, y, w), std::invalid_argument);
  const std::vector<double> not_normalized = {0.5, 0.5, 0.5, 0.5};
  CHECK_THROWS_AS(stage_error(y, y, not_normalized), std::invalid_argument);
}

TEST_CASE("alpha_from_error") {
  CHECK(std::abs(alpha_from_error(0.1) - 1.0986122886681098) < 1e-12);
  CHECK(std::abs(alpha_from_error(0.25) - 0.5493061443340548) < 1e-12);
  CHECK(alpha_from_error(0.5 - 1e-12) < 1e-11);
  CHECK(alpha_from_error(0.5 - 1e-12) > 0.0);
  const double capped = 0.5 * std::log((1 - 1e-6) / 1e-6);
  CHECK(alpha_from_error(0.0) == capped);
  CHECK(alpha_from_error(-0.1) == capped);
  CHECK_THROWS_AS(alpha_from_error(0.5), std::domain_error);
  CHECK_THROWS_AS(alpha_from_error(0.7), std::domain_error);

  CHECK(classify_stage_error(0.0) == StageOutcome::AcceptAndStop);
  CHECK(classify_stage_error(0.2) == StageOutcome::Accept);
  CHECK(classify_stage_error(0.5) == StageOutcome::Reject);
}

TEST_CASE("update_weights") {
  const std::vector<double> w = {0.5, 0.5};
  const std::vector<int> y = {1, 1};
  const std::vector<int> p = {1, -1};
  CHECK(update_weights(w, p, y, 0.0) == w);
  // alpha = ln 2: the miss goes to 0.5 * 2, the hit to 0.5 / 2, then renormalize.
  const auto u = update_weights(w, p, y, std::log(2.0));
  CHECK(u[0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(u[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK_THROWS(update_weights(w, p, y, std::numeric_limits<double>::infinity()));
}

TEST_CASE("post-update error is one half on random fixtures") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  std::bernoulli_distribution coin(0.5);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 10 + rep;
    std::vector<double> w(n);
    std::vector<int> y(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = u(rng);
      y[i] = coin(rng) ? 1 : -1;
      p[i] = std::bernoulli_distribution(0.25)(rng) ? -y[i] : y[i];
    }
    p[0] = -y[0];
    p[1] = y[1];
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& v : w) v /= total;
    const double eps = stage_error(p, y, w);
    if (eps >= 0.5) continue;
    const auto next = update_weights(w, p, y, alpha_from_error(eps));
    CHECK(std::abs(std::accumulate(next.begin(), next.end(), 0.0) - 1.0) <= 1e-9);
    CHECK(std::abs(stage_error(p, y, next) - 0.5) <= 1e-6);
  }
}

TEST_CASE("boosted_score on hand-built stages") {
  const std::vector<double> x = {0.0};
  const BoostedModel all_plus({{leaf(1, 0), 1.0, 0.1}, {leaf(2, 1), 0.3, 0.2}}, BoostConfig{});
  CHECK(all_plus.score(x) == 1.0);

  const BoostedModel cancel({{leaf(1, 0), 1.0, 0.1}, {leaf(0, 1), 1.0, 0.1}}, BoostConfig{});
  CHECK(cancel.score(x) == 0.0);
  CHECK(cancel.predict(x) == Label::Background);

  const BoostedModel three({{leaf(1, 0), 2.0, 0.1}, {leaf(0, 1), 1.0, 0.1}, {leaf(1, 0), 1.0, 0.1}}, BoostConfig{});
  CHECK(boosted_score(three, x) == 0.5);
  CHECK(boosted_score(three, x, 1) == 1.0);
  CHECK(boosted_score(three, x, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(boosted_score(three, x, 0), std::out_of_range);
  CHECK_THROWS_AS(boosted_score(three, x, 4), std::out_of_range);

  // A base score of exactly 0.5 votes -1.
  CHECK(base_vote(BaseModel{leaf(1, 1)}, x) == -1);
}

TEST_CASE("scaling every alpha leaves labels unchanged") {
  std::vector<BoostStage> stages;
  std::vector<BoostStage> scaled;
  const std::vector<double> alphas = {0.7, 0.2, 1.3, 0.4};
  const std::vector<double> cuts = {-0.5, 0.3, 0.0, 1.1};
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    stages.push_back({stump(cuts[i]), alphas[i], 0.1});
    scaled.push_back({stump(cuts[i]), alphas[i] * 3.7, 0.1});
  }
  const BoostedModel a(stages, BoostConfig{}), b(scaled, BoostConfig{});
  for (double v = -2.0; v <= 2.0; v += 0.05) {
    const std::vector<double> x = {v};
    CHECK(a.predict(x) == b.predict(x));
  }
}

TEST_CASE("fit_boosted with one stage reproduces its base learner") {
  const Dataset d = synthetic::overlapping_gaussians(200, 2, 1.0, 1);
  const auto balanced = rebalance_weights(d);
  BoostConfig cfg;
  cfg.n_stages = 1;
  TreeConfig tree;
  tree.max_depth = 3;
  cfg.base = tree;
  const auto m = fit_boosted(d, balanced, cfg);
  REQUIRE(m.size() == 1);
  CHECK(m.stages()[0].alpha > 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto x = d.features().row(i);
    const double base = base_score(m.stages()[0].model, x);
    CHECK(m.score(x) == (base > 0.5 ? 1.0 : -1.0));
    CHECK(m.predict(x) == (base > 0.5 ? Label::Signal : Label::Background));
  }
}

TEST_CASE("fit_boosted keeps boost weights normalized and balances each stage") {
  const Dataset d = synthetic::overlapping_gaussians(300, 2, 1.0, 2);
  const auto balanced = rebalance_weights(d);
  for (InitWeights init : {InitWeights::Uniform, InitWeights::Balanced}) {
    BoostConfig cfg;
    cfg.n_stages = 8;
    cfg.init_weights = init;
    TreeConfig tree;
    tree.max_depth = 2;
    cfg.base = tree;
    const auto m = fit_boosted(d, balanced, cfg);
    REQUIRE(m.size() >= 2);

    // Replay the weight sequence from the recorded stages.
    std::vector<double> w(d.size());
    if (init == InitWeights::Uniform) {
      std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(d.size()));
    } else {
      const double total = std::accumulate(balanced.weights.begin(), balanced.weights.end(), 0.0);
      for (std::size_t i = 0; i < d.size(); ++i) w[i] = balanced.weights[i] / total;
    }
    const auto y = signs(d);
    const auto votes = stage_votes(m, d);
    for (std::size_t s = 0; s < m.size(); ++s) {
      const double eps = stage_error(votes[s], y, w);
      CHECK(eps == doctest::Approx(m.stages()[s].error).epsilon(1e-12));
      CHECK(m.stages()[s].alpha == doctest::Approx(alpha_from_error(eps)).epsilon(1e-12));
      w = update_weights(w, votes[s], y, m.stages()[s].alpha);
      CHECK(std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) <= 1e-9);
      CHECK(std::abs(stage_error(votes[s], y, w) - 0.5) <= 1e-6);
    }
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double s = m.score(d.features().row(i));
      CHECK(s >= -1.0);
      CHECK(s <= 1.0);
    }
  }
}

TEST_CASE("fit_boosted stops on a perfect stage and rejects a chance-level first stage") {
  Dataset sep(std::vector<std::string>{"x"});
  for (int i = 0; i < 20; ++i) sep.add(i, std::vector<double>{static_cast<double>(i)}, 1.0, i < 10 ? Label::Background : Label::Signal);
  BoostConfig cfg;
  cfg.n_stages = 5;
  cfg.base = TreeConfig{};
  std::vector<StageTrace> trace;
  const auto m = fit_boosted(sep, rebalance_weights(sep), cfg, 1, &trace);
  CHECK(m.size() == 1);
  CHECK(m.stages()[0].alpha == alpha_from_error(0.0));
  REQUIRE(trace.size() == 1);
  CHECK(trace[0].outcome == StageOutcome::AcceptAndStop);

  // Identical features, balanced labels: every tree is one leaf at 0.5 and votes -1.
  Dataset flat(std::vector<std::string>{"x"});
  for (int i = 0; i < 10; ++i) flat.add(i, std::vector<double>{1.0}, 1.0, i % 2 ? Label::Signal : Label::Background);
  CHECK_THROWS(fit_boosted(flat, rebalance_weights(flat), cfg));

  Dataset one_class(std::vector<std::string>{"x"});
  one_class.add(0, std::vector<double>{1.0}, 1.0, Label::Signal);
  CHECK_THROWS(fit_boosted(one_class, BalancedWeights{{1.0}}, cfg));
}

TEST_CASE("fit_boosted is deterministic across worker counts") {
  const Dataset d = synthetic::overlapping_gaussians(200, 3, 1.0, 9);
  BoostConfig cfg;
  cfg.n_stages = 4;
  EnsembleConfig base;
  base.n_trees = 5;
  base.flavor = EnsembleFlavor::ExtraTrees;
  base.tree.max_depth = 4;
  cfg.base = base;
  cfg.rng_seed = 17;
  const auto a = fit_boosted(d, rebalance_weights(d), cfg, 1);
  const auto b = fit_boosted(d, rebalance_weights(d), cfg, 3);
  CHECK(a == b);
}

TEST_CASE("BXT master training error mostly decreases over stages") {
  const Dataset d = synthetic::overlapping_gaussians(200, 2, 1.0, 21);
  BoostConfig cfg;
  cfg.n_stages = 10;
  EnsembleConfig base;
  base.n_trees = 10;
  base.flavor = EnsembleFlavor::ExtraTrees;
  cfg.base = base;
  cfg.rng_seed = 3;
  std::vector<StageTrace> trace;
  const auto m = fit_boosted(d, rebalance_weights(d), cfg, 2, &trace);
  REQUIRE(trace.size() >= 2);
  int non_increasing = 0;
  int transitions = 0;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i].outcome == StageOutcome::Reject) break;
    ++transitions;
    if (trace[i].master_error <= trace[i - 1].master_error + 1e-12) ++non_increasing;
  }
  MESSAGE("stages=" << m.size() << " non-increasing transitions=" << non_increasing << "/" << transitions);
  CHECK(transitions >= 8);
  CHECK(non_increasing >= 8);
}

TEST_CASE("staged_diagnostics") {
  Dataset sep(std::vector<std::string>{"x"});
  for (int i = 0; i < 40; ++i)
    sep.add(i, std::vector<double>{static_cast<double>(i)}, 0.5 + (i % 3), i < 30 ? Label::Background : Label::Signal);
  BoostConfig cfg;
  cfg.n_stages = 3;
  TreeConfig tree;
  cfg.base = tree;
  const auto m = fit_boosted(sep, rebalance_weights(sep), cfg);
  const auto diag = staged_diagnostics(m, sep, 75.0);
  REQUIRE(diag.size() == m.size());
  for (const auto& s : diag) {
    CHECK(s.fp_count == 0);
    CHECK(s.fp_wsum == 0.0);
    std::size_t n = 0;
    for (const auto& b : s.histogram) n += b.count_s + b.count_b;
    CHECK(n == sep.size());
  }
  CHECK(diag[0].stage == 1);

  // Stage 1 matches the bare base learner thresholded at the same percentile.
  const Dataset d = synthetic::overlapping_gaussians(300, 2, 0.8, 5);
  BoostConfig c2;
  c2.n_stages = 4;
  TreeConfig t2;
  t2.max_depth = 3;
  c2.base = t2;
  const auto bm = fit_boosted(d, rebalance_weights(d), c2);
  const auto dd = staged_diagnostics(bm, d, 85.0);
  std::vector<double> base_scores;
  for (std::size_t i = 0; i < d.size(); ++i) base_scores.push_back(base_vote(bm.stages()[0].model, d.features().row(i)));
  const double thr = metrics::threshold_at_percentile(base_scores, 85.0);
  std::size_t fp = 0;
  double fpw = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (base_scores[i] > thr && !is_signal(d.labels()[i])) {
      ++fp;
      fpw += d.weights()[i];
    }
  CHECK(dd[0].fp_count == fp);
  CHECK(dd[0].fp_wsum == doctest::Approx(fpw).epsilon(1e-12));

  CHECK_THROWS(staged_diagnostics(bm, d, 0.0));
  CHECK_THROWS(staged_diagnostics(bm, d, 100.0));
}

TEST_CASE("score_histogram") {
  const std::vector<double> s = {-1.0, -0.5, 0.0, 0.5, 1.0};
  const std::vector<Label> l = {Label::Background, Label::Background, Label::Signal, Label::Signal, Label::Signal};
  const std::vector<double> w = {1, 2, 3, 4, 5};
  const auto h = score_histogram(s, l, w, 4, -1.0, 1.0);
  REQUIRE(h.size() == 4);
  CHECK(h[0].count_b == 1);
  CHECK(h[1].count_b == 1);
  CHECK(h[2].count_s == 1);
  CHECK(h[3].count_s == 2);
  CHECK(h[3].wsum_s == 9.0);
  CHECK(h[0].lo == -1.0);
  CHECK(h[3].hi == 1.0);
}
