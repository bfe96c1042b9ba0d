#pragma once

// Independent reference implementations used only by tests. Nothing here
// calls into the library's tree, metric or ensemble code paths.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

namespace oracle {

struct Row {
  std::vector<double> x;
  bool signal = false;
  double w = 1.0;
};

inline double gini(double s, double b) {
  const double p = s / (s + b);
  return 2.0 * p * (1.0 - p);
}

inline double gain(double ls, double lb, double rs, double rb) {
  const double wl = ls + lb;
  const double wr = rs + rb;
  const double g = gini(ls + rs, lb + rb) - (wl * gini(ls, lb) + wr * gini(rs, rb)) / (wl + wr);
  return std::max(0.0, g);
}

struct Split {
  std::size_t feature;
  double threshold;
  double quality;
};

// O(F * n^2): every midpoint of consecutive distinct values, sums recomputed
// from scratch per candidate.
inline std::optional<Split> brute_force_split(const std::vector<Row>& rows, const std::vector<std::size_t>& idx,
                                              std::size_t num_features, double min_quality) {
  std::optional<Split> best;
  for (std::size_t f = 0; f < num_features; ++f) {
    std::vector<double> values;
    for (auto i : idx) values.push_back(rows[i].x[f]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t v = 0; v + 1 < values.size(); ++v) {
      const double t = (values[v] + values[v + 1]) / 2.0;
      double ls = 0, lb = 0, rs = 0, rb = 0;
      for (auto i : idx) {
        const bool left = rows[i].x[f] <= t;
        double& cell = rows[i].signal ? (left ? ls : rs) : (left ? lb : rb);
        cell += rows[i].w;
      }
      if (!(ls + lb > 0) || !(rs + rb > 0)) continue;
      const double q = gain(ls, lb, rs, rb);
      if (q <= min_quality) continue;
      if (!best || q > best->quality + 1e-12) best = Split{f, t, q};
    }
  }
  return best;
}

struct Node {
  bool leaf = true;
  double s = 0, b = 0;
  std::size_t feature = 0;
  double threshold = 0;
  std::unique_ptr<Node> left, right;
};

struct Params {
  int max_depth = 1000;
  std::size_t min_samples_split = 2;
  double min_quality = 0.0;
};

inline std::unique_ptr<Node> build(const std::vector<Row>& rows, const std::vector<std::size_t>& idx,
                                   std::size_t num_features, const Params& p, int depth) {
  auto node = std::make_unique<Node>();
  for (auto i : idx) (rows[i].signal ? node->s : node->b) += rows[i].w;
  if (node->s == 0 || node->b == 0) return node;
  if (depth >= p.max_depth || idx.size() < p.min_samples_split) return node;
  const auto split = brute_force_split(rows, idx, num_features, p.min_quality);
  if (!split) return node;
  std::vector<std::size_t> l, r;
  for (auto i : idx) (rows[i].x[split->feature] <= split->threshold ? l : r).push_back(i);
  node->leaf = false;
  node->feature = split->feature;
  node->threshold = split->threshold;
  node->left = build(rows, l, num_features, p, depth + 1);
  node->right = build(rows, r, num_features, p, depth + 1);
  return node;
}

inline double predict(const Node& n, const std::vector<double>& x) {
  const Node* cur = &n;
  while (!cur->leaf) cur = x[cur->feature] <= cur->threshold ? cur->left.get() : cur->right.get();
  return cur->s + cur->b > 0 ? cur->s / (cur->s + cur->b) : 0.0;
}

// Probability that a random signal outranks a random background, both drawn
// with probability proportional to weight; ties count one half.
inline double pairwise_auc(const std::vector<double>& scores, const std::vector<bool>& signal,
                           const std::vector<double>& w) {
  double num = 0, ps = 0, pb = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) (signal[i] ? ps : pb) += w[i];
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!signal[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (signal[j]) continue;
      const double c = scores[i] > scores[j] ? 1.0 : (scores[i] == scores[j] ? 0.5 : 0.0);
      num += w[i] * w[j] * c;
    }
  }
  return num / (ps * pb);
}

// cov(a, b) / (sd(a) sd(b)) with population moments.
inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb) / n;
    va += (a[i] - ma) * (a[i] - ma) / n;
    vb += (b[i] - mb) * (b[i] - mb) / n;
  }
  return cov / (std::sqrt(va) * std::sqrt(vb));
}

// Composite Simpson integration of the standard normal density on [a, b].
inline double normal_tail_simpson(double a, double b, int intervals = 200000) {
  const double h = (b - a) / intervals;
  auto f = [](double t) { return std::exp(-t * t / 2) / std::sqrt(2 * M_PI); };
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) s += f(a + i * h) * (i % 2 ? 4 : 2);
  return s * h / 3;
}

}  // namespace oracle
