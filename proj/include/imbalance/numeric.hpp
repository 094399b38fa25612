#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace imbalance {

// Summation in ascending order. The result depends only on the multiset of
// values, which keeps context-conditioned scores bit-identical under row
// permutations.
inline double order_invariant_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

inline double order_invariant_mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return order_invariant_sum({values.begin(), values.end()}) / static_cast<double>(values.size());
}

/// Population variance about `mean`.
inline double order_invariant_variance(std::span<const double> values, double mean) {
  if (values.empty()) return 0.0;
  std::vector<double> sq(values.size());
  std::transform(values.begin(), values.end(), sq.begin(), [mean](double v) { return (v - mean) * (v - mean); });
  return order_invariant_sum(std::move(sq)) / static_cast<double>(values.size());
}

/// Median; even counts average the two middle values. Empty input gives NaN.
inline double median(std::vector<double> values) {
  if (values.empty()) return std::nan("");
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// floor(x + 0.5): round half up, identical on every platform.
inline long long round_half_up(double x) { return static_cast<long long>(std::floor(x + 0.5)); }

}  // namespace imbalance
