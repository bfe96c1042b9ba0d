#include "hepforest/boosting.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <type_traits>

#include "hepforest/metrics.hpp"

namespace hepforest {

namespace {

void check_lengths(std::size_t a, std::size_t b, std::size_t c, const char* where) {
  if (a != b || a != c) throw std::invalid_argument(std::string(where) + ": length mismatch");
}

void check_distribution(std::span<const double> w, const char* where) {
  double sum = 0.0;
  for (const double v : w) sum += v;
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument(std::string(where) + ": boost weights must sum to 1");
}

}  // namespace

double base_score(const BaseModel& m, std::span<const double> x) {
  return std::visit(
      [&](const auto& model) {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, DecisionTree>)
          return model.predict_score(x);
        else
          return model.score(x);
      },
      m);
}

int base_vote(const BaseModel& m, std::span<const double> x) { return base_score(m, x) > 0.5 ? 1 : -1; }

void BoostConfig::validate() const {
  if (n_stages < 1) throw ConfigError("boost: n_stages must be >= 1");
  std::visit([](const auto& c) { c.validate(); }, base);
}

double stage_error(std::span<const int> predictions, std::span<const int> labels,
                   std::span<const double> boost_weights) {
  check_lengths(predictions.size(), labels.size(), boost_weights.size(), "stage_error");
  check_distribution(boost_weights, "stage_error");
  double eps = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] != labels[i]) eps += boost_weights[i];
  return std::clamp(eps, 0.0, 1.0);
}

StageOutcome classify_stage_error(double eps) {
  if (eps >= 0.5) return StageOutcome::Reject;
  if (eps <= 0.0) return StageOutcome::AcceptAndStop;
  return StageOutcome::Accept;
}

double alpha_from_error(double eps) {
  if (std::isnan(eps) || eps >= 0.5)
    throw std::domain_error("alpha_from_error: stage error must be below 0.5");
  if (eps <= 0.0) eps = kPerfectStageErrorFloor;
  return 0.5 * std::log((1.0 - eps) / eps);
}

std::vector<double> update_weights(std::span<const double> boost_weights, std::span<const int> predictions,
                                   std::span<const int> labels, double alpha) {
  check_lengths(boost_weights.size(), predictions.size(), labels.size(), "update_weights");
  if (!std::isfinite(alpha)) throw std::invalid_argument("update_weights: alpha must be finite");
  check_distribution(boost_weights, "update_weights");
  // Misses only, by exp(2 alpha): after renormalization this is the symmetric
  // exp(+-alpha) update, which is what leaves the stage at error 1/2.
  const double factor = std::exp(2.0 * alpha);
  std::vector<double> out(boost_weights.begin(), boost_weights.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (predictions[i] != labels[i]) out[i] *= factor;
    sum += out[i];
  }
  for (auto& w : out) w /= sum;
  return out;
}

BoostedModel::BoostedModel(std::vector<BoostStage> stages, BoostConfig config)
    : stages_(std::move(stages)), config_(std::move(config)) {
  if (stages_.empty()) throw std::invalid_argument("BoostedModel: no stages");
  for (const auto& s : stages_)
    if (!std::isfinite(s.alpha) || s.alpha <= 0.0)
      throw std::invalid_argument("BoostedModel: stage alphas must be finite and positive");
}

std::size_t BoostedModel::num_features() const {
  if (stages_.empty()) return 0;
  return std::visit([](const auto& m) { return m.num_features(); }, stages_.front().model);
}

double BoostedModel::score(std::span<const double> x, std::optional<std::size_t> upto_stage) const {
  const std::size_t k = upto_stage.value_or(stages_.size());
  if (k < 1 || k > stages_.size()) throw std::out_of_range("boosted_score: stage index out of range");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t m = 0; m < k; ++m) {
    num += stages_[m].alpha * base_vote(stages_[m].model, x);
    den += stages_[m].alpha;
  }
  return num / den;
}

double boosted_score(const BoostedModel& m, std::span<const double> x, std::optional<std::size_t> upto_stage) {
  return m.score(x, upto_stage);
}

BoostedModel fit_boosted(const Dataset& d, const BalancedWeights& balanced, const BoostConfig& cfg,
                         unsigned workers, std::vector<StageTrace>* trace) {
  cfg.validate();
  if (d.empty()) throw std::invalid_argument("fit_boosted: empty dataset");
  if (d.count(Label::Signal) == 0 || d.count(Label::Background) == 0)
    throw DataError("fit_boosted: both classes must be present");
  const std::size_t n = d.size();

  std::vector<double> weights(n);
  if (cfg.init_weights == InitWeights::Uniform) {
    std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(n));
  } else {
    if (balanced.weights.size() != n) throw std::invalid_argument("fit_boosted: balanced weights length mismatch");
    double sum = 0.0;
    for (const double w : balanced.weights) sum += w;
    if (!(sum > 0.0)) throw DataError("fit_boosted: balanced weights sum to zero");
    for (std::size_t i = 0; i < n; ++i) weights[i] = balanced.weights[i] / sum;
  }
  const std::vector<double> initial = weights;

  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = to_sign(d.labels()[i]);

  std::vector<BoostStage> stages;
  std::vector<double> master(n, 0.0);
  std::vector<int> votes(n);
  for (std::size_t m = 0; m < cfg.n_stages; ++m) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t seed = derive_seed(cfg.rng_seed, m);
    BaseModel model = std::visit(
        [&](const auto& base) -> BaseModel {
          using T = std::decay_t<decltype(base)>;
          if constexpr (std::is_same_v<T, TreeConfig>) {
            TreeConfig tc = base;
            tc.rng_seed = seed;
            return fit_tree(SampleView(d.features(), d.labels(), weights), tc);
          } else {
            EnsembleConfig ec = base;
            ec.rng_seed = seed;
            return fit_ensemble(d, weights, ec, workers);
          }
        },
        cfg.base);

    for (std::size_t i = 0; i < n; ++i) votes[i] = base_vote(model, d.features().row(i));
    const double eps = stage_error(votes, labels, weights);
    const StageOutcome outcome = classify_stage_error(eps);
    const double alpha = outcome == StageOutcome::Reject ? 0.0 : alpha_from_error(eps);

    StageTrace t;
    t.stage = m + 1;
    t.error = eps;
    t.alpha = alpha;
    t.outcome = outcome;

    if (outcome != StageOutcome::Reject) {
      double master_err = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        master[i] += alpha * votes[i];
        if ((master[i] > 0.0 ? 1 : -1) != labels[i]) master_err += initial[i];
      }
      t.master_error = master_err;
      stages.push_back({std::move(model), alpha, eps});
      if (outcome == StageOutcome::Accept) weights = update_weights(weights, votes, labels, alpha);
    }
    t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (trace) trace->push_back(t);
    if (outcome != StageOutcome::Accept) break;
  }
  if (stages.empty()) throw std::runtime_error("fit_boosted: first stage is no better than chance");
  return BoostedModel(std::move(stages), cfg);
}

std::vector<std::vector<int>> stage_votes(const BoostedModel& m, const Dataset& d) {
  if (d.num_features() != m.num_features()) throw std::invalid_argument("stage_votes: feature count mismatch");
  std::vector<std::vector<int>> votes(m.size(), std::vector<int>(d.size()));
  for (std::size_t s = 0; s < m.size(); ++s)
    for (std::size_t i = 0; i < d.size(); ++i) votes[s][i] = base_vote(m.stages()[s].model, d.features().row(i));
  return votes;
}

std::vector<std::vector<double>> staged_scores(const BoostedModel& m, const Dataset& d) {
  const auto votes = stage_votes(m, d);
  std::vector<std::vector<double>> scores(m.size(), std::vector<double>(d.size()));
  std::vector<double> num(d.size(), 0.0);
  double den = 0.0;
  for (std::size_t s = 0; s < m.size(); ++s) {
    const double a = m.stages()[s].alpha;
    den += a;
    for (std::size_t i = 0; i < d.size(); ++i) {
      num[i] += a * votes[s][i];
      scores[s][i] = num[i] / den;
    }
  }
  return scores;
}

std::vector<HistogramBin> score_histogram(std::span<const double> scores, std::span<const Label> labels,
                                          std::span<const double> weights, std::size_t bins, double lo,
                                          double hi) {
  check_lengths(scores.size(), labels.size(), weights.size(), "score_histogram");
  if (bins < 1 || !(hi > lo)) throw std::invalid_argument("score_histogram: invalid binning");
  std::vector<HistogramBin> hist(bins);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    hist[b].lo = lo + width * static_cast<double>(b);
    hist[b].hi = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double pos = (scores[i] - lo) / width;
    auto b = pos <= 0.0 ? std::size_t{0} : static_cast<std::size_t>(pos);
    b = std::min(b, bins - 1);
    auto& bin = hist[b];
    if (is_signal(labels[i])) {
      ++bin.count_s;
      bin.wsum_s += weights[i];
    } else {
      ++bin.count_b;
      bin.wsum_b += weights[i];
    }
  }
  return hist;
}

std::vector<StageDiagnostics> staged_diagnostics(const BoostedModel& m, const Dataset& d, double percentile,
                                                 std::size_t bins) {
  if (!(percentile > 0.0 && percentile < 100.0))
    throw std::invalid_argument("staged_diagnostics: percentile must be in (0, 100)");
  std::vector<StageDiagnostics> out;
  if (d.empty()) return out;
  const auto scores = staged_scores(m, d);
  for (std::size_t s = 0; s < scores.size(); ++s) {
    StageDiagnostics diag;
    diag.stage = s + 1;
    diag.histogram = score_histogram(scores[s], d.labels(), d.weights(), bins, -1.0, 1.0);
    diag.threshold = metrics::threshold_at_percentile(scores[s], percentile);
    const auto c = metrics::confusion_weighted(scores[s], d.labels(), d.weights(), diag.threshold);
    diag.selected = c.selected();
    diag.fp_count = c.fp_n;
    diag.fp_wsum = c.fp_w;
    out.push_back(std::move(diag));
  }
  return out;
}

}  // namespace hepforest
