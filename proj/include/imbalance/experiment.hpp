#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include "imbalance/classifier.hpp"
#include "imbalance/data.hpp"
#include "imbalance/decision.hpp"
#include "imbalance/errors.hpp"
#include "imbalance/metrics.hpp"
#include "imbalance/rng.hpp"
#include "imbalance/sampling.hpp"
#include "imbalance/synthetic.hpp"

namespace imbalance {

enum class Method { None, Threshold, Oversample, SyntheticUpsample, Downsample };

inline constexpr Method kAllMethods[] = {Method::None, Method::Threshold, Method::Oversample,
                                         Method::SyntheticUpsample, Method::Downsample};

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::None: return "None";
    case Method::Threshold: return "Threshold";
    case Method::Oversample: return "Oversample";
    case Method::SyntheticUpsample: return "SyntheticUpsample";
    case Method::Downsample: return "Downsample";
  }
  return "?";
}

/// Short column label used in the Markdown results table.
inline std::string_view table_label(Method m) {
  switch (m) {
    case Method::None: return "None";
    case Method::Threshold: return "Thrsh.";
    case Method::Oversample: return "OS";
    case Method::SyntheticUpsample: return "SynUp";
    case Method::Downsample: return "DS";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  for (Method m : kAllMethods)
    if (to_string(m) == s || table_label(m) == s) return m;
  throw ConfigInvalid("unknown method '" + std::string(s) + "'");
}

/// Parameters of the built-in two-Gaussian dataset generator.
struct GeneratorSpec {
  std::size_t n0 = 1500;
  std::size_t n1 = 1000;
  std::size_t dim = 3;
  std::uint64_t seed = 7;
};

/// One dataset of a manifest: either a CSV file or a generator.
struct DatasetEntry {
  std::string name;
  std::filesystem::path path;
  std::string label_column;
  std::string minority_label;
  std::optional<GeneratorSpec> generator;
};

inline Dataset load_entry(const DatasetEntry& e) {
  if (e.generator) {
    const auto& g = *e.generator;
    return synthetic::two_gaussian(g.n0, g.n1, g.dim, g.seed, e.name);
  }
  auto d = load_csv(e.path, e.label_column, e.minority_label, e.name);
  d.validate();
  return d;
}

/// The zero-file demo manifest: one generated two-Gaussian dataset.
inline std::vector<DatasetEntry> demo_manifest() {
  return {DatasetEntry{"two-gaussian-demo", {}, {}, {}, GeneratorSpec{}}};
}

struct ExperimentConfig {
  std::vector<DatasetEntry> datasets;
  std::vector<std::size_t> context_sizes{100, 500, 1000};
  std::vector<double> imbalances{0.05, 0.1, 0.2, 0.3};
  std::vector<Method> methods{std::begin(kAllMethods), std::end(kAllMethods)};
  SoftClassifierSpec classifier;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::size_t test_per_class = 500;
  std::uint64_t master_seed = 0;
  std::size_t workers = 1;
  std::size_t k_neighbors = 5;
  bool standardize = true;  // built-in backends only

  void validate() const {
    if (datasets.empty()) throw ConfigInvalid("no datasets configured");
    if (context_sizes.empty()) throw ConfigInvalid("no context sizes configured");
    for (auto n : context_sizes)
      if (n < 2) throw ConfigInvalid("context sizes must be at least 2");
    if (imbalances.empty()) throw ConfigInvalid("no imbalance levels configured");
    for (double p : imbalances)
      if (!(p > 0.0 && p < 1.0)) throw ConfigInvalid("imbalances must lie in (0, 1)");
    if (methods.empty()) throw ConfigInvalid("no methods configured");
    if (seeds.empty()) throw ConfigInvalid("at least one seed is required");
    if (test_per_class < 1) throw ConfigInvalid("test_per_class must be positive");
    if (workers < 1) throw ConfigInvalid("workers must be at least 1");
    if (k_neighbors < 1) throw ConfigInvalid("k_neighbors must be at least 1");
    std::set<std::string> names;
    for (const auto& d : datasets)
      if (!names.insert(d.name).second) throw ConfigInvalid("duplicate dataset name '" + d.name + "'");
  }
};

struct ResultRow {
  std::string dataset;
  std::size_t n = 0;
  double pi1 = 0.0;
  Method method = Method::None;
  std::uint64_t seed = 0;
  std::size_t context_rows = 0;  // rows handed to the classifier
  std::optional<EvalReport> report;
  double auc = std::nan("");
  double wall_time = 0.0;  // seconds spent resampling and predicting
  std::string error_kind;
  std::string error_message;

  bool ok() const noexcept { return report.has_value(); }
};

/// Shortest round-trip decimal form; NaN becomes an empty string.
inline std::string format_number(double v) {
  if (std::isnan(v)) return {};
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

/// Seed of one grid cell, a stable hash of its coordinates. Method seeds
/// are derived from it by name, so adding methods leaves other draws intact.
inline std::uint64_t cell_seed(std::uint64_t master, std::string_view dataset, std::size_t n, double pi1,
                               std::uint64_t seed) {
  return SeedHasher(master).add(dataset).add(static_cast<std::uint64_t>(n)).add(format_number(pi1)).add(seed).value();
}

inline std::uint64_t sub_seed(std::uint64_t cell, std::string_view purpose) {
  return SeedHasher(cell).add(purpose).value();
}

/// Scores for the test rows from a classifier conditioned on `context`.
/// Built-in backends see features standardized with context statistics.
inline SoftScores score_test_set(const SoftClassifierSpec& spec, const ContextSet& context, const ContextSet& test,
                                 bool standardize_features = true) {
  if (spec.is_builtin() && standardize_features) {
    auto [ctx, tst] = standardize(context, test);
    return predict_proba(spec, ctx, tst.features());
  }
  return predict_proba(spec, context, test.features());
}

/// The imbalanced context and balanced test set of one grid cell.
struct CellData {
  ContextSet context;
  ContextSet test;
};

inline CellData prepare_cell(const Dataset& dataset, std::size_t test_per_class, std::size_t n, double pi1,
                             std::uint64_t cell) {
  auto split = make_split(dataset, test_per_class, sub_seed(cell, "split"));
  auto context = induce_imbalance(split.context, n, pi1, sub_seed(cell, "imbalance"));
  return {std::move(context), std::move(split.test)};
}

namespace detail {

inline std::pair<std::string, std::string> describe(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const Error& e) {
    return {e.kind(), e.what()};
  } catch (const std::exception& e) {
    return {"Exception", e.what()};
  }
}

inline std::vector<ResultRow> run_cell(const ExperimentConfig& cfg, const Dataset* dataset,
                                       std::exception_ptr load_error, const std::string& name, std::size_t n,
                                       double pi1, std::uint64_t seed) {
  std::vector<ResultRow> rows;
  for (Method m : cfg.methods) {
    ResultRow r;
    r.dataset = name;
    r.n = n;
    r.pi1 = pi1;
    r.method = m;
    r.seed = seed;
    rows.push_back(std::move(r));
  }
  auto fail_all = [&](const std::exception_ptr& ep) {
    auto [kind, msg] = describe(ep);
    for (auto& r : rows) {
      r.error_kind = kind;
      r.error_message = msg;
    }
    return rows;
  };
  if (load_error) return fail_all(load_error);

  const auto cseed = cell_seed(cfg.master_seed, name, n, pi1, seed);
  std::optional<CellData> cell;
  try {
    cell = prepare_cell(*dataset, cfg.test_per_class, n, pi1, cseed);
  } catch (...) {
    return fail_all(std::current_exception());
  }
  const auto* context = &cell->context;
  const auto& test = cell->test;
  const auto& y = test.labels();

  struct Scored {
    SoftScores scores;
    std::size_t context_rows;
    double seconds;
  };
  auto score = [&](const ContextSet& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    auto s = score_test_set(cfg.classifier, ctx, test, cfg.standardize);
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    return Scored{std::move(s), ctx.size(), dt.count()};
  };
  std::optional<Scored> shared;  // None and Threshold use the same scores

  for (auto& row : rows) {
    try {
      Scored scored;
      ThresholdRule rule = ThresholdRule::standard();
      if (row.method == Method::None || row.method == Method::Threshold) {
        if (!shared) shared = score(*context);
        scored = *shared;
        if (row.method == Method::Threshold) rule = bayes_threshold(context->pi1());
      } else {
        const auto t0 = std::chrono::steady_clock::now();
        SamplingMethod sm;
        sm.kind = row.method == Method::Oversample          ? SamplingKind::Oversample
                  : row.method == Method::SyntheticUpsample ? SamplingKind::SyntheticUpsample
                                                            : SamplingKind::Downsample;
        sm.k_neighbors = cfg.k_neighbors;
        const auto balanced = resample(sm, *context, sub_seed(cseed, to_string(row.method)), dataset->categorical);
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        scored = score(balanced.context);
        scored.seconds += dt.count();
      }
      row.report = evaluate(y, apply_threshold(scored.scores, rule));
      row.auc = roc_curve(scored.scores, y).auc;
      row.context_rows = scored.context_rows;
      row.wall_time = scored.seconds;
    } catch (...) {
      auto [kind, msg] = describe(std::current_exception());
      row.error_kind = kind;
      row.error_message = msg;
    }
  }
  return rows;
}

}  // namespace detail

/// Runs every (dataset, N, pi1, seed) cell with every configured method.
/// Data-level methods rebalance the induced context before prediction;
/// Threshold applies tau = pi1 of the induced context; all others use 0.5.
/// Rows come out in grid order whatever the worker count; failures become
/// error rows.
inline std::vector<ResultRow> run_grid(const ExperimentConfig& cfg) {
  cfg.validate();

  std::vector<std::optional<Dataset>> data(cfg.datasets.size());
  std::vector<std::exception_ptr> load_errors(cfg.datasets.size());
  for (std::size_t i = 0; i < cfg.datasets.size(); ++i) {
    try {
      data[i] = load_entry(cfg.datasets[i]);
    } catch (...) {
      load_errors[i] = std::current_exception();
    }
  }

  struct Cell {
    std::size_t dataset;
    std::size_t n;
    double pi1;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (std::size_t d = 0; d < cfg.datasets.size(); ++d)
    for (auto n : cfg.context_sizes)
      for (double p : cfg.imbalances)
        for (auto s : cfg.seeds) cells.push_back({d, n, p, s});

  std::vector<std::vector<ResultRow>> out(cells.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const auto& c = cells[i];
      out[i] = detail::run_cell(cfg, data[c.dataset] ? &*data[c.dataset] : nullptr, load_errors[c.dataset],
                                cfg.datasets[c.dataset].name, c.n, c.pi1, c.seed);
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < std::min(cfg.workers, cells.size()); ++w) pool.emplace_back(work);
    work();
  }

  std::vector<ResultRow> rows;
  for (auto& v : out) std::move(v.begin(), v.end(), std::back_inserter(rows));
  return rows;
}

// ---------------------------------------------------------------------------
// Aggregation

enum class Dimension { Dataset, N, Pi1, Method };

struct MetricMeans {
  double acc_class0 = 0.0, acc_class1 = 0.0, balanced = 0.0, worst_class = 0.0;
  double average = 0.0, prob_error = 0.0, auc = 0.0;
};

struct AggregateRow {
  std::string dataset;  // "Average" for the across-dataset rows
  std::optional<std::size_t> n;
  std::optional<double> pi1;
  std::optional<Method> method;
  MetricMeans means;
  std::size_t count = 0;  // rows (or datasets, for Average rows) averaged
  bool is_average = false;
};

inline constexpr std::string_view kAverageLabel = "Average";

namespace detail {

struct MeanAccumulator {
  MetricMeans sum;
  std::size_t count = 0;
  std::size_t auc_count = 0;

  void add(const MetricMeans& m, bool has_auc) {
    sum.acc_class0 += m.acc_class0;
    sum.acc_class1 += m.acc_class1;
    sum.balanced += m.balanced;
    sum.worst_class += m.worst_class;
    sum.average += m.average;
    sum.prob_error += m.prob_error;
    if (has_auc) {
      sum.auc += m.auc;
      ++auc_count;
    }
    ++count;
  }

  MetricMeans mean() const {
    const double k = static_cast<double>(count);
    return {sum.acc_class0 / k, sum.acc_class1 / k, sum.balanced / k,  sum.worst_class / k,
            sum.average / k,    sum.prob_error / k, auc_count ? sum.auc / static_cast<double>(auc_count) : std::nan("")};
  }
};

inline MetricMeans metrics_of(const ResultRow& r) {
  const auto& e = *r.report;
  return {e.acc_class0, e.acc_class1, e.balanced, e.worst_class, e.average, e.prob_error, r.auc};
}

}  // namespace detail

/// Unweighted means over every dimension not in `keep` (seeds are always
/// collapsed). Groups appear in first-seen order. When Dataset is kept, an
/// "Average" row per remaining key follows, averaging the per-dataset rows
/// with equal weight. Error rows are ignored.
inline std::vector<AggregateRow> aggregate(std::span<const ResultRow> rows,
                                           const std::set<Dimension>& keep = {Dimension::Dataset, Dimension::Method}) {
  const bool by_dataset = keep.contains(Dimension::Dataset);
  using Key = std::tuple<std::string, std::optional<std::size_t>, std::optional<double>, std::optional<Method>>;
  auto key_of = [&](const ResultRow& r) {
    return Key{by_dataset ? r.dataset : std::string(kAverageLabel),
               keep.contains(Dimension::N) ? std::optional(r.n) : std::nullopt,
               keep.contains(Dimension::Pi1) ? std::optional(r.pi1) : std::nullopt,
               keep.contains(Dimension::Method) ? std::optional(r.method) : std::nullopt};
  };

  std::vector<Key> order;
  std::map<Key, detail::MeanAccumulator> groups;
  for (const auto& r : rows) {
    if (!r.ok()) continue;
    const auto k = key_of(r);
    auto [it, inserted] = groups.try_emplace(k);
    if (inserted) order.push_back(k);
    it->second.add(detail::metrics_of(r), !std::isnan(r.auc));
  }
  if (order.empty()) throw EmptyInput("no successful result rows to aggregate");

  std::vector<AggregateRow> out;
  for (const auto& k : order) {
    const auto& acc = groups.at(k);
    out.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k), acc.mean(), acc.count, !by_dataset});
  }
  if (!by_dataset) return out;

  // across-dataset averages, keyed by the remaining dimensions
  using Rest = std::tuple<std::optional<std::size_t>, std::optional<double>, std::optional<Method>>;
  std::vector<Rest> rest_order;
  std::map<Rest, detail::MeanAccumulator> across;
  for (const auto& row : std::vector<AggregateRow>(out)) {
    const Rest rk{row.n, row.pi1, row.method};
    auto [it, inserted] = across.try_emplace(rk);
    if (inserted) rest_order.push_back(rk);
    it->second.add(row.means, !std::isnan(row.means.auc));
  }
  for (const auto& rk : rest_order) {
    const auto& acc = across.at(rk);
    out.push_back({std::string(kAverageLabel), std::get<0>(rk), std::get<1>(rk), std::get<2>(rk), acc.mean(),
                   acc.count, true});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepAxis { Threshold, MajorityCount };

struct SweepResult {
  SweepAxis axis = SweepAxis::Threshold;
  std::vector<double> axis_values;
  std::vector<EvalReport> reports;
};

namespace detail {
inline void require_increasing(std::span<const double> v, std::string_view what) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) throw ConfigInvalid(std::string(what) + " must be strictly increasing");
}
}  // namespace detail

/// Evaluates one set of scores at every threshold in `taus`.
inline SweepResult threshold_sweep(const SoftScores& scores, std::span<const Label> y_true, std::span<const double> taus) {
  if (taus.empty()) throw ConfigInvalid("threshold sweep needs at least one threshold");
  for (double t : taus)
    if (!(t >= 0.0 && t <= 1.0)) throw ThresholdOutOfRange("sweep thresholds must lie in [0, 1]");
  detail::require_increasing(taus, "sweep thresholds");
  SweepResult out{SweepAxis::Threshold, {taus.begin(), taus.end()}, {}};
  for (double t : taus) out.reports.push_back(evaluate(y_true, apply_threshold(scores, {t, ThresholdSource::Fixed})));
  return out;
}

/// Threshold sweep from a single prediction of the test set.
inline SweepResult threshold_sweep(const SoftClassifierSpec& spec, const ContextSet& context, const ContextSet& test,
                                   std::span<const double> taus, bool standardize_features = true) {
  const auto scores = score_test_set(spec, context, test, standardize_features);
  return threshold_sweep(scores, test.labels(), taus);
}

/// Keeps the minority fixed and evaluates at tau = 0.5 after reducing the
/// majority to each target count; each target gets a fresh prediction.
inline SweepResult downsample_sweep(const SoftClassifierSpec& spec, const ContextSet& context, const ContextSet& test,
                                    std::span<const std::size_t> n0_targets, std::uint64_t seed,
                                    bool standardize_features = true) {
  if (n0_targets.empty()) throw ConfigInvalid("downsample sweep needs at least one target");
  SweepResult out{SweepAxis::MajorityCount, {}, {}};
  for (auto t : n0_targets) out.axis_values.push_back(static_cast<double>(t));
  detail::require_increasing(out.axis_values, "majority targets");
  for (auto t : n0_targets) {
    const auto ctx = downsample_to(context, t, seed);
    const auto scores = score_test_set(spec, ctx, test, standardize_features);
    out.reports.push_back(evaluate(test.labels(), apply_threshold(scores, ThresholdRule::standard())));
  }
  return out;
}

}  // namespace imbalance
