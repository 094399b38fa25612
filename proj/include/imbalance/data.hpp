#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "imbalance/csv.hpp"
#include "imbalance/errors.hpp"
#include "imbalance/matrix.hpp"
#include "imbalance/numeric.hpp"
#include "imbalance/rng.hpp"

namespace imbalance {

/// Class label. 1 is always the minority class, 0 the majority.
using Label = int;

struct Dataset {
  std::string name;
  Matrix features;
  std::vector<Label> labels;
  std::vector<std::string> feature_names;
  std::vector<bool> categorical;  // per feature column
  std::string majority_value;     // raw label text mapped to 0
  std::string minority_value;     // raw label text mapped to 1
  std::size_t rejected_rows = 0;  // rows dropped for a missing label

  std::size_t n() const noexcept { return labels.size(); }

  std::size_t count(Label y) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), y));
  }

  double pi1() const { return labels.empty() ? 0.0 : static_cast<double>(count(1)) / static_cast<double>(n()); }

  /// Throws InvalidContext when a structural invariant is broken.
  void validate() const {
    if (features.rows() != labels.size()) throw InvalidContext("feature rows differ from label count");
    if (feature_names.size() != features.cols() || categorical.size() != features.cols())
      throw InvalidContext("column metadata does not match feature width");
    for (Label y : labels)
      if (y != 0 && y != 1) throw InvalidContext("labels must be 0 or 1");
    if (count(0) == 0 || count(1) == 0) throw InvalidContext("both classes must be present");
    for (double v : features.data())
      if (std::isnan(v)) throw InvalidContext("NaN feature value after ingestion");
  }
};

/// A labeled sample with its class counts. Producers in this module always
/// yield both classes; single-class sets are allowed so classifiers can be
/// queried on degenerate contexts.
class ContextSet {
 public:
  ContextSet(Matrix features, std::vector<Label> labels)
      : features_(std::move(features)), labels_(std::move(labels)) {
    if (features_.rows() != labels_.size()) throw InvalidContext("feature rows differ from label count");
    if (labels_.empty()) throw InvalidContext("context set is empty");
    for (Label y : labels_) {
      if (y == 1) ++n1_;
      else if (y == 0) ++n0_;
      else throw InvalidContext("labels must be 0 or 1");
    }
  }

  const Matrix& features() const noexcept { return features_; }
  const std::vector<Label>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return features_.cols(); }
  std::size_t n0() const noexcept { return n0_; }
  std::size_t n1() const noexcept { return n1_; }
  double pi1() const noexcept { return static_cast<double>(n1_) / static_cast<double>(n0_ + n1_); }
  bool has_both_classes() const noexcept { return n0_ > 0 && n1_ > 0; }

  std::vector<std::size_t> rows_of_class(Label y) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels_.size(); ++i)
      if (labels_[i] == y) out.push_back(i);
    return out;
  }

  ContextSet subset(std::span<const std::size_t> rows) const {
    std::vector<Label> labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = labels_[rows[i]];
    return {features_.select_rows(rows), std::move(labels)};
  }

  friend bool operator==(const ContextSet& a, const ContextSet& b) {
    return a.features_ == b.features_ && a.labels_ == b.labels_;
  }

 private:
  Matrix features_;
  std::vector<Label> labels_;
  std::size_t n0_ = 0;
  std::size_t n1_ = 0;
};

struct Split {
  ContextSet context;  // the pool that imbalance is induced from
  ContextSet test;     // class balanced
  std::vector<std::size_t> context_rows;  // dataset row ids, ascending
  std::vector<std::size_t> test_rows;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto* ws = " \t";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline bool is_missing(std::string_view s) {
  static constexpr std::string_view tokens[] = {"", "?", "NA", "N/A", "NaN", "nan", "null", "NULL"};
  return std::find(std::begin(tokens), std::end(tokens), s) != std::end(tokens);
}

inline bool parse_finite(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return false;
  out = v;
  return true;
}

}  // namespace detail

/// Reads a headed CSV file. The label column must hold exactly two distinct
/// values; `minority_label` is mapped to 1. Columns with any non-numeric
/// value are integer-encoded by first appearance. Missing cells are imputed
/// with the column median (numeric) or most frequent code (categorical);
/// rows with a missing label are dropped.
inline Dataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                        const std::string& minority_label, std::string name = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile("cannot open " + path.string());
  const csv::Table table = csv::parse(in);
  if (table.header.empty()) throw EmptyDataset(path.string() + " has no header row");

  std::size_t label_idx = table.header.size();
  for (std::size_t i = 0; i < table.header.size(); ++i)
    if (detail::trim(table.header[i]) == label_column) label_idx = i;
  if (label_idx == table.header.size()) throw MissingColumn("label column '" + label_column + "' not found in " + path.string());

  Dataset d;
  d.name = name.empty() ? path.stem().string() : std::move(name);

  std::vector<const std::vector<std::string>*> kept;
  std::vector<std::string> distinct;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() != table.header.size())
      throw MalformedCsv("record " + std::to_string(r + 2) + " has " + std::to_string(row.size()) +
                         " fields, header has " + std::to_string(table.header.size()));
    const auto label = detail::trim(row[label_idx]);
    if (detail::is_missing(label)) {
      ++d.rejected_rows;
      continue;
    }
    if (std::find(distinct.begin(), distinct.end(), label) == distinct.end()) distinct.emplace_back(label);
    kept.push_back(&row);
  }
  if (kept.empty()) throw EmptyDataset(path.string() + " has no labeled rows");
  if (distinct.size() != 2)
    throw NotBinary("label column '" + label_column + "' has " + std::to_string(distinct.size()) + " distinct values");
  if (minority_label != distinct[0] && minority_label != distinct[1])
    throw UnknownMinorityLabel("minority label '" + minority_label + "' is not one of '" + distinct[0] + "', '" +
                               distinct[1] + "'");
  d.minority_value = minority_label;
  d.majority_value = minority_label == distinct[0] ? distinct[1] : distinct[0];

  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == label_idx) continue;
    feature_cols.push_back(c);
    d.feature_names.emplace_back(detail::trim(table.header[c]));
  }

  const std::size_t n = kept.size();
  d.features = Matrix(n, feature_cols.size());
  d.labels.resize(n);
  for (std::size_t r = 0; r < n; ++r) d.labels[r] = detail::trim((*kept[r])[label_idx]) == minority_label ? 1 : 0;

  for (std::size_t j = 0; j < feature_cols.size(); ++j) {
    const std::size_t c = feature_cols[j];
    bool numeric = true;
    for (const auto* row : kept) {
      const auto cell = detail::trim((*row)[c]);
      double v;
      if (!detail::is_missing(cell) && !detail::parse_finite(cell, v)) {
        numeric = false;
        break;
      }
    }
    std::unordered_map<std::string, double> codes;
    std::vector<double> observed;
    for (std::size_t r = 0; r < n; ++r) {
      const auto cell = detail::trim((*kept[r])[c]);
      double v = std::nan("");
      if (!detail::is_missing(cell)) {
        if (numeric) {
          detail::parse_finite(cell, v);
        } else {
          auto [it, inserted] = codes.try_emplace(std::string(cell), static_cast<double>(codes.size()));
          v = it->second;
        }
        observed.push_back(v);
      }
      d.features(r, j) = v;
    }
    double fill = 0.0;
    if (numeric && !observed.empty()) {
      fill = median(std::move(observed));
    } else if (!observed.empty()) {
      // most frequent code, lowest code on ties
      std::vector<std::size_t> freq(codes.size(), 0);
      for (double v : observed) ++freq[static_cast<std::size_t>(v)];
      fill = static_cast<double>(std::max_element(freq.begin(), freq.end()) - freq.begin());
    }
    for (std::size_t r = 0; r < n; ++r)
      if (std::isnan(d.features(r, j))) d.features(r, j) = fill;
    d.categorical.push_back(!numeric);
  }
  return d;
}

/// Seeded balanced test set of `test_per_class` rows per class; every other
/// row forms the context pool.
inline Split make_split(const Dataset& d, std::size_t test_per_class, std::uint64_t seed) {
  if (test_per_class == 0) throw InsufficientClassSamples("test_per_class must be positive");
  Rng rng(seed);
  std::vector<bool> in_test(d.n(), false);
  for (Label y : {0, 1}) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < d.n(); ++i)
      if (d.labels[i] == y) rows.push_back(i);
    if (rows.size() < test_per_class)
      throw InsufficientClassSamples("class " + std::to_string(y) + " has " + std::to_string(rows.size()) +
                                     " samples, " + std::to_string(test_per_class) + " needed for the test set");
    for (std::size_t k : sample_without_replacement(rows.size(), test_per_class, rng)) in_test[rows[k]] = true;
  }
  std::vector<std::size_t> context_rows, test_rows;
  for (std::size_t i = 0; i < d.n(); ++i) (in_test[i] ? test_rows : context_rows).push_back(i);
  if (context_rows.empty()) throw InsufficientClassSamples("no rows left for the context pool");

  auto build = [&](const std::vector<std::size_t>& rows) {
    std::vector<Label> labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = d.labels[rows[i]];
    return ContextSet(d.features.select_rows(rows), std::move(labels));
  };
  return Split{build(context_rows), build(test_rows), std::move(context_rows), std::move(test_rows), seed};
}

/// Seeded draw of exactly n0 majority and n1 minority rows from the pool,
/// without replacement. Row order of the pool is preserved.
inline ContextSet draw_class_counts(const ContextSet& pool, std::size_t n0, std::size_t n1, std::uint64_t seed) {
  const auto rows0 = pool.rows_of_class(0);
  const auto rows1 = pool.rows_of_class(1);
  if (rows0.size() < n0)
    throw InsufficientClassSamples("class 0 has " + std::to_string(rows0.size()) + " samples, " + std::to_string(n0) +
                                   " requested");
  if (rows1.size() < n1)
    throw InsufficientClassSamples("class 1 has " + std::to_string(rows1.size()) + " samples, " + std::to_string(n1) +
                                   " requested");
  Rng rng(seed);
  std::vector<std::size_t> chosen;
  for (std::size_t k : sample_without_replacement(rows0.size(), n0, rng)) chosen.push_back(rows0[k]);
  for (std::size_t k : sample_without_replacement(rows1.size(), n1, rng)) chosen.push_back(rows1[k]);
  std::sort(chosen.begin(), chosen.end());
  return pool.subset(chosen);
}

/// Minority count for a context of n_total rows at prior pi1 (round half up).
inline std::size_t minority_count(std::size_t n_total, double pi1) {
  return static_cast<std::size_t>(std::max(0LL, round_half_up(static_cast<double>(n_total) * pi1)));
}

/// Context of n_total rows with n1 = round(n_total * pi1) minority rows.
inline ContextSet induce_imbalance(const ContextSet& pool, std::size_t n_total, double pi1, std::uint64_t seed) {
  if (!(pi1 > 0.0 && pi1 < 1.0)) throw InsufficientClassSamples("pi1 must lie in (0, 1)");
  const std::size_t n1 = minority_count(n_total, pi1);
  if (n1 < 1 || n1 >= n_total)
    throw InsufficientClassSamples("n_total=" + std::to_string(n_total) + " at pi1=" + std::to_string(pi1) +
                                   " leaves an empty class");
  return draw_class_counts(pool, n_total - n1, n1, seed);
}

/// Per-feature affine map fitted on one sample: zero mean, unit population
/// variance. Zero-variance features map to 0.
class Standardizer {
 public:
  static Standardizer fit(const Matrix& x) {
    if (x.empty()) throw InvalidContext("cannot standardize on an empty context");
    Standardizer s;
    s.mean_.resize(x.cols());
    s.scale_.resize(x.cols());
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const auto col = x.column(c);
      const double m = order_invariant_mean(col);
      const double sd = std::sqrt(order_invariant_variance(col, m));
      s.mean_[c] = m;
      s.scale_[c] = sd > 0.0 ? 1.0 / sd : 0.0;
    }
    return s;
  }

  Matrix apply(const Matrix& x) const {
    if (x.cols() != mean_.size()) throw DimensionMismatch("standardizer fitted on a different feature width");
    Matrix out = x;
    for (std::size_t r = 0; r < out.rows(); ++r)
      for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = (out(r, c) - mean_[c]) * scale_[c];
    return out;
  }

  ContextSet apply(const ContextSet& s) const { return {apply(s.features()), s.labels()}; }

  const std::vector<double>& mean() const noexcept { return mean_; }
  /// Reciprocal standard deviation per feature (0 for constant features).
  const std::vector<double>& inverse_scale() const noexcept { return scale_; }

 private:
  std::vector<double> mean_;
  std::vector<double> scale_;
};

/// Standardizes both sets with statistics fitted on the context only.
inline std::pair<ContextSet, ContextSet> standardize(const ContextSet& context, const ContextSet& test) {
  const auto s = Standardizer::fit(context.features());
  return {s.apply(context), s.apply(test)};
}

}  // namespace imbalance
