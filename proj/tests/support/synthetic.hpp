#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hepforest/dataset.hpp"

namespace synthetic {

inline std::vector<std::string> feature_names(std::size_t f) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < f; ++j) names.push_back("f" + std::to_string(j));
  return names;
}

// Two overlapping Gaussian classes in `dims` dimensions. Signal is centred at
// +separation/2 along every axis, background at -separation/2. Weights mimic
// the physics importance weights: signals small, backgrounds large.
inline hepforest::Dataset overlapping_gaussians(std::size_t n, std::size_t dims, double separation,
                                                std::uint64_t seed, double signal_fraction = 0.35) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  hepforest::Dataset d(feature_names(dims));
  std::vector<double> x(dims);
  for (std::size_t i = 0; i < n; ++i) {
    const bool s = unif(rng) < signal_fraction;
    for (std::size_t j = 0; j < dims; ++j) x[j] = normal(rng) + (s ? 0.5 : -0.5) * separation;
    const double w = s ? 0.002 * (0.5 + unif(rng)) : 0.6 * (0.5 + unif(rng));
    d.add(static_cast<std::int64_t>(100000 + i), x, w, s ? hepforest::Label::Signal : hepforest::Label::Background);
  }
  return d;
}

// Integer-valued features in [0, levels) with integer weights in [1, 5]:
// every weight sum is exact in double precision.
inline hepforest::Dataset integer_grid(std::size_t n, std::size_t dims, int levels, std::uint64_t seed,
                                       bool unit_weights = false) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> value(0, levels - 1);
  std::uniform_int_distribution<int> weight(1, 5);
  std::bernoulli_distribution coin(0.5);
  hepforest::Dataset d(feature_names(dims));
  std::vector<double> x(dims);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : x) v = value(rng);
    const bool s = coin(rng);
    d.add(static_cast<std::int64_t>(i), x, unit_weights ? 1.0 : weight(rng),
          s ? hepforest::Label::Signal : hepforest::Label::Background);
  }
  return d;
}

}  // namespace synthetic
