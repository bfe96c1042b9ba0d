#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "hepforest/common.hpp"
#include "hepforest/dataset.hpp"

namespace hepforest::metrics {

// Sums of raw importance weights (and counts) per cell of the 2x2 table.
// Selected = score strictly above the threshold.
struct WeightedConfusion {
  double tp_w = 0.0;  // selected signal (s-hat)
  double fp_w = 0.0;  // selected background (b-hat)
  double fn_w = 0.0;
  double tn_w = 0.0;
  std::size_t tp_n = 0;
  std::size_t fp_n = 0;
  std::size_t fn_n = 0;
  std::size_t tn_n = 0;

  double shat() const { return tp_w; }
  double bhat() const { return fp_w; }
  double signal_total() const { return tp_w + fn_w; }
  double background_total() const { return fp_w + tn_w; }
  std::size_t selected() const { return tp_n + fp_n; }
};

WeightedConfusion confusion_weighted(std::span<const double> scores, std::span<const Label> labels,
                                     std::span<const double> weights, double threshold);

// sqrt(2 ((s + b) ln(1 + s/b) - s)). Requires b > 0, s >= 0.
double ams_full(double shat, double bhat);

// s / sqrt(b). Requires b > 0.
double ams_simple(double shat, double bhat);

// Balanced weight of misclassified events as a share of the total (the plain
// sum when the weights total 1).
double balanced_error(std::span<const Label> predictions, std::span<const Label> truth,
                      std::span<const double> balanced_weights);

// Nearest-rank empirical percentile: the sorted score at 1-based rank
// ceil(percentile / 100 * n).
double threshold_at_percentile(std::span<const double> scores, double percentile);

struct CurvePoint {
  double percentile = 0.0;
  double threshold = 0.0;
  double shat = 0.0;
  double bhat = 0.0;
  std::size_t selected = 0;
  // NaN when bhat == 0 (AMS undefined).
  double ams = 0.0;
  double ams_simple = 0.0;

  bool defined() const { return bhat > 0.0; }
};

struct SignificanceCurve {
  std::vector<CurvePoint> points;
  // Index of the defined point with the largest AMS.
  std::optional<std::size_t> best;
};

SignificanceCurve significance_curve(std::span<const double> scores, std::span<const Label> labels,
                                     std::span<const double> weights,
                                     std::span<const double> percentile_grid);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

// Weighted ROC swept over distinct scores in descending order, from (0,0) to (1,1).
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const Label> labels,
                                std::span<const double> weights);

// Trapezoidal area under a ROC curve.
double auc(std::span<const RocPoint> curve);

double roc_auc(std::span<const double> scores, std::span<const Label> labels,
               std::span<const double> weights);

// (TPR) / (FPR). Throws InfiniteLikelihoodRatio when no background is selected.
double lr_plus(const WeightedConfusion& c);

class InfiniteLikelihoodRatio : public std::domain_error {
 public:
  InfiniteLikelihoodRatio() : std::domain_error("infinite LR+: selection contains no false positives") {}
};

// One-sided Gaussian tail 1 - Phi(z).
double sigma_to_pvalue(double z);

// Phi^{-1}(1 - p) for p in (0, 1).
double pvalue_to_sigma(double p);

}  // namespace hepforest::metrics
