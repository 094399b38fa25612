#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "imbalance/data.hpp"
#include "imbalance/errors.hpp"
#include "imbalance/numeric.hpp"
#include "imbalance/rng.hpp"

namespace imbalance {

enum class SamplingKind { None, Downsample, Oversample, SyntheticUpsample };

inline std::string_view to_string(SamplingKind k) {
  switch (k) {
    case SamplingKind::None: return "None";
    case SamplingKind::Downsample: return "Downsample";
    case SamplingKind::Oversample: return "Oversample";
    case SamplingKind::SyntheticUpsample: return "SyntheticUpsample";
  }
  return "?";
}

struct SamplingMethod {
  SamplingKind kind = SamplingKind::None;
  std::size_t k_neighbors = 5;                  // SyntheticUpsample
  std::optional<std::size_t> majority_target;   // Downsample; defaults to n1

  void validate() const {
    if (kind == SamplingKind::SyntheticUpsample && k_neighbors < 1)
      throw std::invalid_argument("k_neighbors must be at least 1");
    if (majority_target && *majority_target < 1) throw std::invalid_argument("majority_target must be at least 1");
  }
};

/// Output of a balancing operation. `warning` is set when the input was
/// already inverted (minority larger than majority) and was returned as is.
struct Resampled {
  ContextSet context;
  std::optional<std::string> warning;
};

/// Keeps every minority row and a seeded subset of exactly `n0_target`
/// majority rows. Row order of the input is preserved.
inline ContextSet downsample_to(const ContextSet& ctx, std::size_t n0_target, std::uint64_t seed) {
  if (n0_target < 1 || n0_target > ctx.n0())
    throw TargetExceedsAvailable("majority target " + std::to_string(n0_target) + " outside [1, " +
                                 std::to_string(ctx.n0()) + "]");
  Rng rng(seed);
  const auto majority = ctx.rows_of_class(0);
  std::vector<std::size_t> keep = ctx.rows_of_class(1);
  for (std::size_t k : sample_without_replacement(majority.size(), n0_target, rng)) keep.push_back(majority[k]);
  std::sort(keep.begin(), keep.end());
  return ctx.subset(keep);
}

/// Removes majority rows until both classes have n1 rows.
inline Resampled downsample(const ContextSet& ctx, std::uint64_t seed) {
  if (ctx.n0() < ctx.n1())
    return {ctx, "downsample: majority (" + std::to_string(ctx.n0()) + ") smaller than minority (" +
                     std::to_string(ctx.n1()) + "); context left unchanged"};
  if (ctx.n1() == 0) throw TooFewMinoritySamples("downsample needs at least one minority row");
  return {downsample_to(ctx, ctx.n1(), seed), std::nullopt};
}

/// Replicates minority rows until n1' = n0. Each minority row appears
/// floor(n0/n1) or ceil(n0/n1) times; the rows receiving the extra copy are
/// a seeded draw without replacement. Copies are appended after the input.
inline Resampled oversample(const ContextSet& ctx, std::uint64_t seed) {
  if (ctx.n1() > ctx.n0())
    return {ctx, "oversample: minority (" + std::to_string(ctx.n1()) + ") larger than majority (" +
                     std::to_string(ctx.n0()) + "); context left unchanged"};
  if (ctx.n1() == 0) throw TooFewMinoritySamples("oversample needs at least one minority row");
  const auto minority = ctx.rows_of_class(1);
  const std::size_t copies = ctx.n0() / ctx.n1();
  const std::size_t remainder = ctx.n0() % ctx.n1();

  std::vector<std::size_t> rows(ctx.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  for (std::size_t c = 1; c < copies; ++c) rows.insert(rows.end(), minority.begin(), minority.end());
  Rng rng(seed);
  for (std::size_t k : sample_without_replacement(minority.size(), remainder, rng)) rows.push_back(minority[k]);
  return {ctx.subset(rows), std::nullopt};
}

namespace detail {

inline double snap_to_nearest(double v, const std::vector<double>& sorted_values) {
  auto it = std::lower_bound(sorted_values.begin(), sorted_values.end(), v);
  if (it == sorted_values.end()) return sorted_values.back();
  if (it == sorted_values.begin()) return *it;
  const double hi = *it;
  const double lo = *(it - 1);
  return (v - lo) <= (hi - v) ? lo : hi;
}

}  // namespace detail

/// SMOTE-style interpolation: appends n0 - n1 minority rows, each
/// x_i + u * (x_j - x_i) with x_i a seeded random minority row, x_j one of its
/// k nearest minority neighbours and u uniform in [0, 1). Neighbours are
/// found by exact search in the context's standardized space. Columns flagged
/// in `categorical` are snapped to the nearest value seen among minority rows.
inline Resampled synthetic_upsample(const ContextSet& ctx, std::size_t k_neighbors, std::uint64_t seed,
                                    const std::vector<bool>& categorical = {}) {
  if (k_neighbors < 1) throw std::invalid_argument("k_neighbors must be at least 1");
  if (ctx.n1() > ctx.n0())
    return {ctx, "synthetic_upsample: minority (" + std::to_string(ctx.n1()) + ") larger than majority (" +
                     std::to_string(ctx.n0()) + "); context left unchanged"};
  if (ctx.n1() == ctx.n0()) return {ctx, std::nullopt};
  if (ctx.n1() < 2)
    throw TooFewMinoritySamples("synthetic upsampling needs at least 2 minority rows, got " +
                                std::to_string(ctx.n1()));
  if (!categorical.empty() && categorical.size() != ctx.dim())
    throw DimensionMismatch("categorical mask width differs from feature width");

  const auto minority = ctx.rows_of_class(1);
  const std::size_t m = minority.size();
  const std::size_t k = std::min(k_neighbors, m - 1);
  const auto& x = ctx.features();
  const auto scale = Standardizer::fit(x).inverse_scale();

  // neighbour lists, nearest first; ties broken by position
  std::vector<std::vector<std::size_t>> neighbours(m);
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t a = 0; a < m; ++a) {
    dist.clear();
    for (std::size_t b = 0; b < m; ++b) {
      if (a == b) continue;
      double s = 0.0;
      for (std::size_t c = 0; c < x.cols(); ++c) {
        const double diff = (x(minority[a], c) - x(minority[b], c)) * scale[c];
        s += diff * diff;
      }
      dist.emplace_back(s, b);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t i = 0; i < k; ++i) neighbours[a].push_back(dist[i].second);
  }

  std::vector<std::vector<double>> seen(x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    if (categorical.empty() || !categorical[c]) continue;
    for (std::size_t r : minority) seen[c].push_back(x(r, c));
    std::sort(seen[c].begin(), seen[c].end());
    seen[c].erase(std::unique(seen[c].begin(), seen[c].end()), seen[c].end());
  }

  Matrix out = x;
  std::vector<Label> labels = ctx.labels();
  Rng rng(seed);
  std::vector<double> row(x.cols());
  for (std::size_t s = 0; s < ctx.n0() - ctx.n1(); ++s) {
    const std::size_t a = rng.uniform_index(m);
    const std::size_t b = neighbours[a][rng.uniform_index(k)];
    const double u = rng.uniform01();
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double xi = x(minority[a], c);
      row[c] = xi + u * (x(minority[b], c) - xi);
      if (!seen[c].empty()) row[c] = detail::snap_to_nearest(row[c], seen[c]);
    }
    out.append_row(row);
    labels.push_back(1);
  }
  return {ContextSet(std::move(out), std::move(labels)), std::nullopt};
}

/// Applies a data-level correction. SamplingKind::None returns the input.
inline Resampled resample(const SamplingMethod& method, const ContextSet& ctx, std::uint64_t seed,
                          const std::vector<bool>& categorical = {}) {
  method.validate();
  switch (method.kind) {
    case SamplingKind::None: return {ctx, std::nullopt};
    case SamplingKind::Downsample:
      if (method.majority_target) return {downsample_to(ctx, *method.majority_target, seed), std::nullopt};
      return downsample(ctx, seed);
    case SamplingKind::Oversample: return oversample(ctx, seed);
    case SamplingKind::SyntheticUpsample: return synthetic_upsample(ctx, method.k_neighbors, seed, categorical);
  }
  return {ctx, std::nullopt};
}

}  // namespace imbalance
