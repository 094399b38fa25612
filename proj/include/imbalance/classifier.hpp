#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "imbalance/data.hpp"
#include "imbalance/errors.hpp"
#include "imbalance/numeric.hpp"
#include "imbalance/sidecar.hpp"

namespace imbalance {

/// Soft scores: predicted P(y = 1 | x, context), one per query row.
class SoftScores {
 public:
  SoftScores() = default;
  explicit SoftScores(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_)
      if (!(v >= 0.0 && v <= 1.0)) throw ScoreOutOfRange("soft score " + std::to_string(v) + " outside [0, 1]");
  }

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const noexcept { return values_; }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  friend bool operator==(const SoftScores&, const SoftScores&) = default;

 private:
  std::vector<double> values_;
};

enum class BandwidthRule { Silverman, Median, Fixed };

/// Nadaraya-Watson estimate of P(y=1 | x) over the context with a Gaussian
/// kernel. Like an in-context learner it conditions on the labeled context
/// without fitting weights, and inherits the context's class prior.
struct KernelIcl {
  BandwidthRule rule = BandwidthRule::Silverman;
  double bandwidth = 1.0;  // used by BandwidthRule::Fixed
};

/// Per-class diagonal Gaussians with empirical class priors.
struct GaussianNb {
  double variance_floor = 1e-9;
};

/// Laplace-smoothed class-1 fraction among the k nearest context rows.
struct KnnProportion {
  std::size_t k = 10;
  double alpha = 1.0;
};

/// A child process speaking the JSON-lines sidecar protocol.
struct External {
  std::vector<std::string> command;
  std::chrono::milliseconds timeout{120000};
};

class SoftClassifierSpec {
 public:
  using Backend = std::variant<KernelIcl, GaussianNb, KnnProportion, External>;

  SoftClassifierSpec() : SoftClassifierSpec(KernelIcl{}) {}
  SoftClassifierSpec(Backend backend) : backend_(std::move(backend)) { validate(); }

  const Backend& backend() const noexcept { return backend_; }

  std::string_view name() const {
    static constexpr std::string_view names[] = {"kernel-icl", "gaussian-nb", "knn", "external"};
    return names[backend_.index()];
  }

  bool is_builtin() const noexcept { return !std::holds_alternative<External>(backend_); }

 private:
  void validate() const {
    if (auto* k = std::get_if<KernelIcl>(&backend_)) {
      if (k->rule == BandwidthRule::Fixed && !(k->bandwidth > 0.0 && std::isfinite(k->bandwidth)))
        throw InvalidClassifierSpec("kernel bandwidth must be positive");
    } else if (auto* g = std::get_if<GaussianNb>(&backend_)) {
      if (!(g->variance_floor > 0.0)) throw InvalidClassifierSpec("variance floor must be positive");
    } else if (auto* n = std::get_if<KnnProportion>(&backend_)) {
      if (n->k < 1) throw InvalidClassifierSpec("knn k must be at least 1");
      if (!(n->alpha >= 0.0)) throw InvalidClassifierSpec("knn smoothing alpha must be non-negative");
    } else if (auto* e = std::get_if<External>(&backend_)) {
      if (e->command.empty()) throw InvalidClassifierSpec("external backend needs a command");
      if (e->timeout.count() <= 0) throw InvalidClassifierSpec("external timeout must be positive");
    }
  }

  Backend backend_;
};

// ---------------------------------------------------------------------------
// Bandwidth heuristics

namespace detail {
inline constexpr std::size_t kExactMedianRows = 2048;
}

/// Median pairwise Euclidean distance among context rows. Exact up to 2048
/// rows, beyond that computed on an evenly strided subset. Returns 1.0 when
/// the median is zero (e.g. all rows identical).
inline double median_bandwidth(const ContextSet& context) {
  const auto& x = context.features();
  std::vector<std::size_t> rows;
  const std::size_t n = x.rows();
  const std::size_t m = std::min(n, detail::kExactMedianRows);
  for (std::size_t i = 0; i < m; ++i) rows.push_back(i * n / m);
  if (rows.size() < 2) return 1.0;
  std::vector<double> dist;
  dist.reserve(rows.size() * (rows.size() - 1) / 2);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = i + 1; j < rows.size(); ++j) dist.push_back(std::sqrt(squared_distance(x.row(rows[i]), x.row(rows[j]))));
  const double med = median(std::move(dist));
  return med > 0.0 ? med : 1.0;
}

/// Silverman's rule of thumb for a d-dimensional Gaussian kernel:
/// sigma * (4 / (d + 2))^(1/(d+4)) * n^(-1/(d+4)), sigma the mean per-feature
/// standard deviation. Returns 1.0 for a constant context.
inline double silverman_bandwidth(const ContextSet& context) {
  const auto& x = context.features();
  const double d = static_cast<double>(std::max<std::size_t>(x.cols(), 1));
  double sigma = 0.0;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const auto col = x.column(c);
    sigma += std::sqrt(order_invariant_variance(col, order_invariant_mean(col)));
  }
  sigma /= d;
  if (!(sigma > 0.0)) return 1.0;
  return sigma * std::pow(4.0 / (d + 2.0), 1.0 / (d + 4.0)) *
         std::pow(static_cast<double>(x.rows()), -1.0 / (d + 4.0));
}

inline double select_bandwidth(const KernelIcl& params, const ContextSet& context) {
  switch (params.rule) {
    case BandwidthRule::Silverman: return silverman_bandwidth(context);
    case BandwidthRule::Median: return median_bandwidth(context);
    case BandwidthRule::Fixed: return params.bandwidth;
  }
  return 1.0;
}

// ---------------------------------------------------------------------------
// Built-in backends

namespace detail {

struct KernelScratch {
  std::vector<double> w0, w1;
};

inline double kernel_icl_score(const ContextSet& context, std::span<const double> query, double bandwidth,
                               KernelScratch& scratch) {
  const auto& x = context.features();
  const auto& y = context.labels();
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  scratch.w0.clear();
  scratch.w1.clear();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double w = std::exp(-squared_distance(query, x.row(i)) * inv);
    (y[i] == 1 ? scratch.w1 : scratch.w0).push_back(w);
  }
  std::sort(scratch.w0.begin(), scratch.w0.end());
  std::sort(scratch.w1.begin(), scratch.w1.end());
  double s0 = 0.0, s1 = 0.0;
  for (double w : scratch.w0) s0 += w;
  for (double w : scratch.w1) s1 += w;
  const double denom = s0 + s1;
  if (!(denom >= std::numeric_limits<double>::min())) return context.pi1();
  return std::clamp(s1 / denom, 0.0, 1.0);
}

}  // namespace detail

/// Kernel-weighted class-1 fraction at `query`; falls back to the context
/// prior when every kernel weight underflows.
inline double kernel_icl_score(const ContextSet& context, std::span<const double> query, double bandwidth) {
  if (!(bandwidth > 0.0)) throw InvalidClassifierSpec("bandwidth must be positive");
  if (query.size() != context.dim()) throw DimensionMismatch("query width differs from context width");
  detail::KernelScratch scratch;
  return detail::kernel_icl_score(context, query, bandwidth, scratch);
}

namespace detail {

inline std::vector<double> predict_kernel_icl(const KernelIcl& params, const ContextSet& context, const Matrix& queries) {
  const double h = select_bandwidth(params, context);
  KernelScratch scratch;
  std::vector<double> out(queries.rows());
  for (std::size_t q = 0; q < queries.rows(); ++q) out[q] = kernel_icl_score(context, queries.row(q), h, scratch);
  return out;
}

inline std::vector<double> predict_gaussian_nb(const GaussianNb& params, const ContextSet& context, const Matrix& queries) {
  if (context.n1() == 0) return std::vector<double>(queries.rows(), 0.0);
  if (context.n0() == 0) return std::vector<double>(queries.rows(), 1.0);
  const auto& x = context.features();
  struct ClassModel {
    double log_prior;
    std::vector<double> mean, var;
  };
  auto fit = [&](Label y) {
    const auto rows = context.rows_of_class(y);
    ClassModel m{std::log(static_cast<double>(rows.size()) / static_cast<double>(context.size())), {}, {}};
    std::vector<double> col(rows.size());
    for (std::size_t c = 0; c < x.cols(); ++c) {
      for (std::size_t i = 0; i < rows.size(); ++i) col[i] = x(rows[i], c);
      const double mu = order_invariant_mean(col);
      m.mean.push_back(mu);
      m.var.push_back(std::max(order_invariant_variance(col, mu), params.variance_floor));
    }
    return m;
  };
  const ClassModel m0 = fit(0), m1 = fit(1);
  auto log_joint = [](const ClassModel& m, std::span<const double> q) {
    double l = m.log_prior;
    for (std::size_t c = 0; c < q.size(); ++c) {
      const double d = q[c] - m.mean[c];
      l -= 0.5 * std::log(2.0 * std::numbers::pi * m.var[c]) + d * d / (2.0 * m.var[c]);
    }
    return l;
  };
  std::vector<double> out(queries.rows());
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    const double diff = log_joint(m1, queries.row(q)) - log_joint(m0, queries.row(q));
    out[q] = std::clamp(1.0 / (1.0 + std::exp(-diff)), 0.0, 1.0);
  }
  return out;
}

inline std::vector<double> predict_knn(const KnnProportion& params, const ContextSet& context, const Matrix& queries) {
  const auto& x = context.features();
  const auto& y = context.labels();
  const std::size_t k = std::min(params.k, context.size());
  std::vector<std::pair<double, Label>> dist(context.size());
  std::vector<double> out(queries.rows());
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    for (std::size_t i = 0; i < context.size(); ++i) dist[i] = {squared_distance(queries.row(q), x.row(i)), y[i]};
    // ties at equal distance resolve by label, so the vote does not depend on row order
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::size_t ones = 0;
    for (std::size_t i = 0; i < k; ++i) ones += dist[i].second == 1 ? 1 : 0;
    out[q] = (static_cast<double>(ones) + params.alpha) / (static_cast<double>(k) + 2.0 * params.alpha);
  }
  return out;
}

inline std::vector<double> predict_external(const External& params, const ContextSet& context, const Matrix& queries) {
  SidecarProcess proc(params.command, params.timeout);
  proc.fit(context);
  auto scores = proc.predict(queries);
  proc.shutdown();
  return scores;
}

}  // namespace detail

/// P(y = 1 | x, context) for every query row. Built-in backends are pure
/// functions of (spec, context, queries); the external backend runs one
/// private sidecar process for the call.
inline SoftScores predict_proba(const SoftClassifierSpec& spec, const ContextSet& context, const Matrix& queries) {
  if (queries.cols() != context.dim())
    throw DimensionMismatch("queries have " + std::to_string(queries.cols()) + " columns, context has " +
                            std::to_string(context.dim()));
  return SoftScores(std::visit(
      [&](const auto& params) -> std::vector<double> {
        using T = std::decay_t<decltype(params)>;
        if constexpr (std::is_same_v<T, KernelIcl>) return detail::predict_kernel_icl(params, context, queries);
        else if constexpr (std::is_same_v<T, GaussianNb>) return detail::predict_gaussian_nb(params, context, queries);
        else if constexpr (std::is_same_v<T, KnnProportion>) return detail::predict_knn(params, context, queries);
        else return detail::predict_external(params, context, queries);
      },
      spec.backend()));
}

}  // namespace imbalance
