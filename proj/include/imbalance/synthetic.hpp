#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>

#include "imbalance/data.hpp"
#include "imbalance/rng.hpp"

namespace imbalance::synthetic {

/// Two isotropic unit-variance Gaussians in `dim` dimensions, class 0 centred
/// at (-1, ..., -1) and class 1 at (+1, ..., +1). Class 0 rows come first.
inline Dataset two_gaussian(std::size_t n0, std::size_t n1, std::size_t dim, std::uint64_t seed,
                            std::string name = "two_gaussian") {
  Rng rng(seed);
  Dataset d;
  d.name = std::move(name);
  d.features = Matrix(n0 + n1, dim);
  d.labels.resize(n0 + n1);
  for (std::size_t i = 0; i < n0 + n1; ++i) {
    const Label y = i < n0 ? 0 : 1;
    const double mu = y == 1 ? 1.0 : -1.0;
    d.labels[i] = y;
    for (std::size_t c = 0; c < dim; ++c) d.features(i, c) = mu + rng.normal();
  }
  for (std::size_t c = 0; c < dim; ++c) {
    d.feature_names.push_back("x" + std::to_string(c));
    d.categorical.push_back(false);
  }
  d.majority_value = "0";
  d.minority_value = "1";
  return d;
}

/// Same generator, returned directly as a labeled set.
inline ContextSet two_gaussian_set(std::size_t n0, std::size_t n1, std::size_t dim, std::uint64_t seed) {
  auto d = two_gaussian(n0, n1, dim, seed);
  return {std::move(d.features), std::move(d.labels)};
}

/// Exact P(y=1 | x) for the generator above when the class-1 prior is pi1.
/// The log-likelihood ratio of the two Gaussians is 2 * sum(x).
inline double two_gaussian_posterior(std::span<const double> x, double pi1) {
  double llr = 0.0;
  for (double v : x) llr += 2.0 * v;
  const double logit = llr + std::log(pi1) - std::log1p(-pi1);
  return 1.0 / (1.0 + std::exp(-logit));
}

}  // namespace imbalance::synthetic
