#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "imbalance/classifier.hpp"
#include "imbalance/data.hpp"
#include "imbalance/decision.hpp"
#include "imbalance/errors.hpp"

namespace imbalance {

/// Confusion counts with class 1 (minority) as the positive class.
struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  double fa_rate() const { return static_cast<double>(fp) / static_cast<double>(fp + tn); }  // P(yhat=1 | y=0)
  double md_rate() const { return static_cast<double>(fn) / static_cast<double>(fn + tp); }  // P(yhat=0 | y=1)

  friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct EvalReport {
  Confusion confusion;
  double acc_class0 = 0.0;
  double acc_class1 = 0.0;
  double balanced = 0.0;     // mean of the per-class accuracies
  double worst_class = 0.0;  // min of the per-class accuracies
  double average = 0.0;      // plain accuracy over the evaluated sample
  double prob_error = 0.0;   // error probability at equal priors, 1 - balanced

  static EvalReport from_confusion(const Confusion& c) {
    if (c.tp + c.fn == 0 || c.tn + c.fp == 0) throw MissingClass("evaluation needs both classes in y_true");
    EvalReport r;
    r.confusion = c;
    r.acc_class0 = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
    r.acc_class1 = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    r.balanced = 0.5 * (r.acc_class0 + r.acc_class1);
    r.worst_class = std::min(r.acc_class0, r.acc_class1);
    r.average = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    r.prob_error = 1.0 - r.balanced;
    return r;
  }

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

inline Confusion confusion(std::span<const Label> y_true, std::span<const Label> y_pred) {
  if (y_true.size() != y_pred.size())
    throw LengthMismatch("y_true has " + std::to_string(y_true.size()) + " entries, y_pred " +
                         std::to_string(y_pred.size()));
  Confusion c;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == 1) (y_pred[i] == 1 ? c.tp : c.fn)++;
    else (y_pred[i] == 1 ? c.fp : c.tn)++;
  }
  return c;
}

/// Per-class, balanced, worst-class and average accuracy of hard predictions.
inline EvalReport evaluate(std::span<const Label> y_true, std::span<const Label> y_pred) {
  return EvalReport::from_confusion(confusion(y_true, y_pred));
}

// ---------------------------------------------------------------------------
// ROC

struct RocPoint {
  double fa_rate = 0.0;
  double detection_rate = 0.0;
};

/// Exact empirical ROC. points[k] is reached by the decision
/// 1[score > thresholds[k]]; tied scores form a single vertex so the
/// trapezoid area equals the Mann-Whitney statistic.
struct RocCurve {
  std::vector<RocPoint> points;
  std::vector<double> thresholds;
  double auc = 0.0;
};

namespace detail {

inline void require_both_classes(std::span<const Label> y_true) {
  bool has0 = false, has1 = false;
  for (Label y : y_true) (y == 1 ? has1 : has0) = true;
  if (!has0 || !has1) throw MissingClass("both classes must be present in y_true");
}

inline void require_same_length(const SoftScores& scores, std::span<const Label> y_true) {
  if (scores.size() != y_true.size())
    throw LengthMismatch(std::to_string(scores.size()) + " scores for " + std::to_string(y_true.size()) + " labels");
}

/// Indices sorted by score; stable so equal scores keep input order.
inline std::vector<std::size_t> order_by_score(const SoftScores& scores, bool descending) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  return idx;
}

}  // namespace detail

inline RocCurve roc_curve(const SoftScores& scores, std::span<const Label> y_true) {
  detail::require_same_length(scores, y_true);
  detail::require_both_classes(y_true);
  const auto idx = detail::order_by_score(scores, /*descending=*/true);
  std::uint64_t pos = 0, neg = 0;
  for (Label y : y_true) (y == 1 ? pos : neg)++;

  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  curve.thresholds.push_back(scores[idx.front()]);
  std::uint64_t tp = 0, fp = 0;
  std::uint64_t twice_area = 0;  // sum of dFP * (tp_prev + tp_new), exact
  for (std::size_t i = 0; i < idx.size();) {
    const double s = scores[idx[i]];
    const std::uint64_t tp_prev = tp, fp_prev = fp;
    for (; i < idx.size() && scores[idx[i]] == s; ++i) (y_true[idx[i]] == 1 ? tp : fp)++;
    twice_area += (fp - fp_prev) * (tp_prev + tp);
    const double next = i < idx.size() ? scores[idx[i]] : std::nextafter(s, -std::numeric_limits<double>::infinity());
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos)});
    curve.thresholds.push_back(next);
  }
  curve.auc = static_cast<double>(twice_area) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
  return curve;
}

/// False-alarm and misdetection rates of one decision rule.
struct OperatingPoint {
  double fa_rate = 0.0;
  double md_rate = 0.0;
};

/// Operating point read off a computed curve: the vertex whose threshold is
/// the largest curve threshold not exceeding tau.
inline OperatingPoint operating_point(const RocCurve& curve, const ThresholdRule& rule) {
  if (curve.points.empty()) throw EmptyInput("empty ROC curve");
  // thresholds decrease along the curve
  std::size_t k = curve.thresholds.size() - 1;
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
    if (curve.thresholds[i] <= rule.tau) {
      k = i;
      break;
    }
  }
  return {curve.points[k].fa_rate, 1.0 - curve.points[k].detection_rate};
}

/// Operating point computed directly from scores with 1[score > tau].
inline OperatingPoint operating_point(const SoftScores& scores, std::span<const Label> y_true, const ThresholdRule& rule) {
  detail::require_same_length(scores, y_true);
  detail::require_both_classes(y_true);
  const auto c = confusion(y_true, apply_threshold(scores, rule));
  return {c.fa_rate(), c.md_rate()};
}

/// Sorted distinct scores plus the midpoints between consecutive ones.
inline std::vector<double> threshold_grid(const SoftScores& scores) {
  std::vector<double> d(scores.begin(), scores.end());
  std::sort(d.begin(), d.end());
  d.erase(std::unique(d.begin(), d.end()), d.end());
  std::vector<double> grid;
  for (std::size_t i = 0; i < d.size(); ++i) {
    grid.push_back(d[i]);
    if (i + 1 < d.size()) {
      const double mid = d[i] + 0.5 * (d[i + 1] - d[i]);
      if (mid > d[i] && mid < d[i + 1]) grid.push_back(mid);
    }
  }
  return grid;
}

struct BestThreshold {
  double tau = 0.5;
  double balanced = 0.0;
};

/// Exhaustive search for the threshold maximizing balanced accuracy. The
/// candidates are the midpoints between consecutive distinct scores plus the
/// largest score (all-negative decision); a single distinct score yields
/// that score. The smallest maximizing candidate is returned.
inline BestThreshold best_balanced_threshold(const SoftScores& scores, std::span<const Label> y_true) {
  detail::require_same_length(scores, y_true);
  detail::require_both_classes(y_true);
  const auto idx = detail::order_by_score(scores, /*descending=*/false);
  std::size_t pos = 0, neg = 0;
  for (Label y : y_true) (y == 1 ? pos : neg)++;

  // walk ascending; after consuming a group of equal scores, everything seen
  // so far is predicted 0 for any tau in [group score, next score)
  // candidates are compared on the exact integer numerator
  // neg_below * pos + (pos - pos_below) * neg of the balanced accuracy
  std::size_t neg_below = 0, pos_below = 0, best_num = 0;
  BestThreshold best{0.0, -1.0};
  for (std::size_t i = 0; i < idx.size();) {
    const double s = scores[idx[i]];
    for (; i < idx.size() && scores[idx[i]] == s; ++i) (y_true[idx[i]] == 1 ? pos_below : neg_below)++;
    const std::size_t num = neg_below * pos + (pos - pos_below) * neg;
    double tau = s;
    if (i < idx.size()) {
      const double next = scores[idx[i]];
      const double mid = s + 0.5 * (next - s);
      tau = mid < next ? mid : s;
    }
    if (best.balanced < 0.0 || num > best_num) {
      best_num = num;
      best = {tau, 0.5 * (static_cast<double>(neg_below) / static_cast<double>(neg) +
                          static_cast<double>(pos - pos_below) / static_cast<double>(pos))};
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Calibration

enum class CalibrationDiagnosis { Calibrated, Underconfident, Overconfident, Class0Biased, Class1Biased, Mixed };

inline std::string_view to_string(CalibrationDiagnosis d) {
  switch (d) {
    case CalibrationDiagnosis::Calibrated: return "Calibrated";
    case CalibrationDiagnosis::Underconfident: return "Underconfident";
    case CalibrationDiagnosis::Overconfident: return "Overconfident";
    case CalibrationDiagnosis::Class0Biased: return "Class0Biased";
    case CalibrationDiagnosis::Class1Biased: return "Class1Biased";
    case CalibrationDiagnosis::Mixed: return "Mixed";
  }
  return "?";
}

struct CalibrationBin {
  double lo = 0.0;
  double hi = 0.0;
  double mean_predicted = std::nan("");  // NaN when count == 0
  double observed_freq = std::nan("");
  std::size_t count = 0;
};

struct CalibrationCurve {
  std::vector<CalibrationBin> bins;
  double ece = 0.0;
  CalibrationDiagnosis diagnosis = CalibrationDiagnosis::Mixed;
};

inline constexpr double kCalibratedEce = 0.05;
inline constexpr double kDiagnosisAgreement = 0.8;

/// Classifies the shape of a reliability curve from its nonempty bins.
/// Checked in order: ECE below 0.05 is Calibrated; observed above predicted
/// in at least 80% of bins means the model under-predicts class 1, i.e. it
/// leans to class 0 (Class0Biased), and symmetrically Class1Biased;
/// predictions closer to 0.5 than observed in 80% of bins is Underconfident,
/// farther is Overconfident; anything else is Mixed.
inline CalibrationDiagnosis diagnose(std::span<const CalibrationBin> bins, double ece) {
  std::size_t nonempty = 0, above = 0, below = 0, toward_half = 0, away_from_half = 0;
  for (const auto& b : bins) {
    if (b.count == 0) continue;
    ++nonempty;
    if (b.observed_freq > b.mean_predicted) ++above;
    if (b.observed_freq < b.mean_predicted) ++below;
    const double dp = std::abs(b.mean_predicted - 0.5), dobs = std::abs(b.observed_freq - 0.5);
    if (dp < dobs) ++toward_half;
    if (dp > dobs) ++away_from_half;
  }
  if (nonempty == 0) return CalibrationDiagnosis::Mixed;
  if (ece < kCalibratedEce) return CalibrationDiagnosis::Calibrated;
  const double n = static_cast<double>(nonempty);
  if (above >= kDiagnosisAgreement * n) return CalibrationDiagnosis::Class0Biased;
  if (below >= kDiagnosisAgreement * n) return CalibrationDiagnosis::Class1Biased;
  if (toward_half >= kDiagnosisAgreement * n) return CalibrationDiagnosis::Underconfident;
  if (away_from_half >= kDiagnosisAgreement * n) return CalibrationDiagnosis::Overconfident;
  return CalibrationDiagnosis::Mixed;
}

namespace detail {

inline double expected_calibration_error(std::span<const CalibrationBin> bins) {
  std::size_t total = 0;
  for (const auto& b : bins) total += b.count;
  if (total == 0) return 0.0;
  double ece = 0.0;
  for (const auto& b : bins)
    if (b.count > 0)
      ece += static_cast<double>(b.count) / static_cast<double>(total) * std::abs(b.observed_freq - b.mean_predicted);
  return ece;
}

inline std::vector<CalibrationBin> empty_bins(std::size_t n_bins) {
  std::vector<CalibrationBin> bins(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) {
    bins[i].lo = static_cast<double>(i) / static_cast<double>(n_bins);
    bins[i].hi = static_cast<double>(i + 1) / static_cast<double>(n_bins);
  }
  return bins;
}

}  // namespace detail

/// Equal-width reliability curve on [0, 1]. A score of exactly 1 falls in
/// the last bin.
inline CalibrationCurve calibration_curve(const SoftScores& scores, std::span<const Label> y_true,
                                          std::size_t n_bins = 10) {
  if (n_bins < 2) throw std::invalid_argument("calibration needs at least 2 bins");
  if (scores.empty()) throw EmptyInput("calibration of an empty sample");
  detail::require_same_length(scores, y_true);
  auto bins = detail::empty_bins(n_bins);
  std::vector<double> sum_pred(n_bins, 0.0), sum_obs(n_bins, 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto b = std::min(static_cast<std::size_t>(scores[i] * static_cast<double>(n_bins)), n_bins - 1);
    sum_pred[b] += scores[i];
    sum_obs[b] += y_true[i] == 1 ? 1.0 : 0.0;
    ++bins[b].count;
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (bins[b].count == 0) continue;
    bins[b].mean_predicted = sum_pred[b] / static_cast<double>(bins[b].count);
    bins[b].observed_freq = sum_obs[b] / static_cast<double>(bins[b].count);
  }
  CalibrationCurve curve{std::move(bins), 0.0, CalibrationDiagnosis::Mixed};
  curve.ece = detail::expected_calibration_error(curve.bins);
  curve.diagnosis = diagnose(curve.bins, curve.ece);
  return curve;
}

/// Pools curves that share bin edges: counts add, per-bin means are
/// count-weighted. ECE and diagnosis are recomputed on the pooled bins.
inline CalibrationCurve average_curves(std::span<const CalibrationCurve> curves) {
  if (curves.empty()) throw EmptyInput("no calibration curves to average");
  const auto& ref = curves.front().bins;
  for (const auto& c : curves) {
    if (c.bins.size() != ref.size()) throw BinMismatch("calibration curves have different bin counts");
    for (std::size_t b = 0; b < ref.size(); ++b)
      if (c.bins[b].lo != ref[b].lo || c.bins[b].hi != ref[b].hi) throw BinMismatch("calibration bin edges differ");
  }
  CalibrationCurve out;
  out.bins = ref;
  for (std::size_t b = 0; b < ref.size(); ++b) {
    double pred = 0.0, obs = 0.0;
    std::size_t count = 0;
    for (const auto& c : curves) {
      const auto& bin = c.bins[b];
      if (bin.count == 0) continue;
      pred += bin.mean_predicted * static_cast<double>(bin.count);
      obs += bin.observed_freq * static_cast<double>(bin.count);
      count += bin.count;
    }
    out.bins[b].count = count;
    out.bins[b].mean_predicted = count ? pred / static_cast<double>(count) : std::nan("");
    out.bins[b].observed_freq = count ? obs / static_cast<double>(count) : std::nan("");
  }
  out.ece = detail::expected_calibration_error(out.bins);
  out.diagnosis = diagnose(out.bins, out.ece);
  return out;
}

/// Unweighted mean of (observed - predicted) over nonempty bins; positive
/// when the model under-predicts class 1.
inline double mean_calibration_gap(const CalibrationCurve& curve) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& b : curve.bins) {
    if (b.count == 0) continue;
    sum += b.observed_freq - b.mean_predicted;
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace imbalance
