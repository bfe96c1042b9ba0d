#include "hepforest/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace hepforest::metrics {

namespace {

void check_lengths(std::size_t a, std::size_t b, std::size_t c, const char* where) {
  if (a != b || a != c) throw std::invalid_argument(std::string(where) + ": length mismatch");
}

// 2 ((1 + x) ln(1 + x) - x) / x^2, the squared ratio of the full to the
// simplified AMS at x = s / b. Power series near zero to avoid cancellation.
double ams_ratio_squared(double x) {
  if (x < 0.1) {
    double term = 1.0;
    double sum = 0.0;
    for (int j = 0; j < 24; ++j) {
      sum += term / static_cast<double>((j + 1) * (j + 2));
      term *= -x;
    }
    return std::min(1.0, 2.0 * sum);
  }
  return std::min(1.0, 2.0 * ((1.0 + x) * std::log1p(x) - x) / (x * x));
}

}  // namespace

WeightedConfusion confusion_weighted(std::span<const double> scores, std::span<const Label> labels,
                                     std::span<const double> weights, double threshold) {
  check_lengths(scores.size(), labels.size(), weights.size(), "confusion_weighted");
  WeightedConfusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (weights[i] < 0.0) throw std::invalid_argument("confusion_weighted: negative weight");
    const bool selected = scores[i] > threshold;
    if (is_signal(labels[i])) {
      if (selected) {
        c.tp_w += weights[i];
        ++c.tp_n;
      } else {
        c.fn_w += weights[i];
        ++c.fn_n;
      }
    } else {
      if (selected) {
        c.fp_w += weights[i];
        ++c.fp_n;
      } else {
        c.tn_w += weights[i];
        ++c.tn_n;
      }
    }
  }
  return c;
}

double ams_simple(double shat, double bhat) {
  if (!(bhat > 0.0)) throw std::domain_error("ams_simple: background estimate must be positive");
  return shat / std::sqrt(bhat);
}

double ams_full(double shat, double bhat) {
  if (!(bhat > 0.0)) throw std::domain_error("ams_full: background estimate must be positive");
  if (shat < 0.0) throw std::domain_error("ams_full: negative signal estimate");
  if (shat == 0.0) return 0.0;
  return ams_simple(shat, bhat) * std::sqrt(ams_ratio_squared(shat / bhat));
}

double balanced_error(std::span<const Label> predictions, std::span<const Label> truth,
                      std::span<const double> balanced_weights) {
  check_lengths(predictions.size(), truth.size(), balanced_weights.size(), "balanced_error");
  double wrong = 0.0, right = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    (predictions[i] != truth[i] ? wrong : right) += balanced_weights[i];
  const double total = wrong + right;
  if (!(total > 0.0)) throw std::invalid_argument("balanced_error: weights sum to zero");
  // Share of the total rather than the raw sum, so rounding in the class sums
  // cannot leak in. The larger share is taken as a complement, which makes
  // err(pred) + err(flipped pred) round to exactly 1.
  return wrong <= right ? wrong / total : 1.0 - right / total;
}

double threshold_at_percentile(std::span<const double> scores, double percentile) {
  if (scores.empty()) throw std::invalid_argument("threshold_at_percentile: no scores");
  if (!(percentile > 0.0 && percentile < 100.0))
    throw std::invalid_argument("threshold_at_percentile: percentile must be in (0, 100)");
  std::vector<double> sorted(scores.begin(), scores.end());
  const std::size_t n = sorted.size();
  auto rank = static_cast<std::size_t>(std::ceil(percentile * static_cast<double>(n) / 100.0));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1), sorted.end());
  return sorted[rank - 1];
}

SignificanceCurve significance_curve(std::span<const double> scores, std::span<const Label> labels,
                                     std::span<const double> weights,
                                     std::span<const double> percentile_grid) {
  check_lengths(scores.size(), labels.size(), weights.size(), "significance_curve");
  SignificanceCurve curve;
  for (const double pct : percentile_grid) {
    CurvePoint p;
    p.percentile = pct;
    p.threshold = threshold_at_percentile(scores, pct);
    const auto c = confusion_weighted(scores, labels, weights, p.threshold);
    p.shat = c.shat();
    p.bhat = c.bhat();
    p.selected = c.selected();
    if (p.defined()) {
      p.ams = ams_full(p.shat, p.bhat);
      p.ams_simple = ams_simple(p.shat, p.bhat);
    } else {
      p.ams = std::numeric_limits<double>::quiet_NaN();
      p.ams_simple = std::numeric_limits<double>::quiet_NaN();
    }
    curve.points.push_back(p);
  }
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const auto& p = curve.points[i];
    if (!p.defined()) continue;
    if (!curve.best || p.ams > curve.points[*curve.best].ams) curve.best = i;
  }
  return curve;
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const Label> labels,
                                std::span<const double> weights) {
  check_lengths(scores.size(), labels.size(), weights.size(), "roc_curve");
  double pos = 0.0;
  double neg = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) (is_signal(labels[i]) ? pos : neg) += weights[i];
  if (!(pos > 0.0) || !(neg > 0.0)) throw std::invalid_argument("roc_curve: both classes must be present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  });

  std::vector<RocPoint> curve{{0.0, 0.0, std::numeric_limits<double>::infinity()}};
  double tp = 0.0;
  double fp = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i)
      (is_signal(labels[order[i]]) ? tp : fp) += weights[order[i]];
    curve.push_back({std::min(1.0, fp / neg), std::min(1.0, tp / pos), s});
  }
  curve.back().fpr = 1.0;
  curve.back().tpr = 1.0;
  return curve;
}

double auc(std::span<const RocPoint> curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) / 2.0;
  return area;
}

double roc_auc(std::span<const double> scores, std::span<const Label> labels,
               std::span<const double> weights) {
  const auto curve = roc_curve(scores, labels, weights);
  return auc(curve);
}

double lr_plus(const WeightedConfusion& c) {
  const double ns = c.signal_total();
  const double nb = c.background_total();
  if (!(ns > 0.0) || !(nb > 0.0)) throw std::invalid_argument("lr_plus: both classes need positive weight");
  if (c.fp_w == 0.0) {
    if (c.tp_w == 0.0) throw std::domain_error("lr_plus: empty selection");
    throw InfiniteLikelihoodRatio();
  }
  return (c.tp_w / ns) / (c.fp_w / nb);
}

double sigma_to_pvalue(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double pvalue_to_sigma(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("pvalue_to_sigma: p must lie in (0, 1)");
  if (p > 0.5) return -pvalue_to_sigma(1.0 - p);
  // Tail probability is decreasing in z; bisect on [0, 40] to machine precision.
  double lo = 0.0;
  double hi = 40.0;
  for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
    const double mid = lo + (hi - lo) / 2.0;
    if (mid == lo || mid == hi) break;
    if (sigma_to_pvalue(mid) > p)
      lo = mid;
    else
      hi = mid;
  }
  return lo + (hi - lo) / 2.0;
}

}  // namespace hepforest::metrics
