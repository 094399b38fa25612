#pragma once

#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "imbalance/classifier.hpp"
#include "imbalance/data.hpp"
#include "imbalance/errors.hpp"

namespace imbalance {

/// Misclassification costs. c01: predicting 0 when y = 1 (misdetection);
/// c10: predicting 1 when y = 0 (false alarm).
class CostMatrix {
 public:
  CostMatrix(double c01, double c10) : c01_(c01), c10_(c10) {
    if (!(c01 >= 0.0 && c10 >= 0.0)) throw DegenerateCosts("costs must be non-negative");
    if (!(c01 + c10 > 0.0)) throw DegenerateCosts("at least one cost must be positive");
  }
  static CostMatrix unit() { return {1.0, 1.0}; }

  double c01() const noexcept { return c01_; }
  double c10() const noexcept { return c10_; }

 private:
  double c01_;
  double c10_;
};

enum class ThresholdSource { Fixed, BayesPrior, SweepOptimal };

inline std::string_view to_string(ThresholdSource s) {
  switch (s) {
    case ThresholdSource::Fixed: return "Fixed";
    case ThresholdSource::BayesPrior: return "BayesPrior";
    case ThresholdSource::SweepOptimal: return "SweepOptimal";
  }
  return "?";
}

struct ThresholdRule {
  double tau = 0.5;
  ThresholdSource source = ThresholdSource::Fixed;

  static ThresholdRule standard() { return {0.5, ThresholdSource::Fixed}; }
  static ThresholdRule fixed(double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw ThresholdOutOfRange("threshold must lie in [0, 1]");
    return {tau, ThresholdSource::Fixed};
  }
};

/// Threshold equivalent to rebalancing a classifier trained at prior pi1:
/// with C01/C10 = pi0/pi1, tau = C10 / (C10 + C01) = pi1.
inline ThresholdRule bayes_threshold(double pi1) {
  if (!(pi1 > 0.0 && pi1 < 1.0)) throw PriorOutOfRange("pi1 must lie strictly between 0 and 1");
  return {pi1, ThresholdSource::BayesPrior};
}

/// Risk-minimizing threshold for a calibrated score: c10 / (c10 + c01).
inline ThresholdRule threshold_from_costs(const CostMatrix& costs) {
  return {costs.c10() / (costs.c10() + costs.c01()), ThresholdSource::Fixed};
}

/// Hard labels 1[score > tau]. A score equal to tau is labeled 0.
inline std::vector<Label> apply_threshold(const SoftScores& scores, const ThresholdRule& rule) {
  std::vector<Label> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > rule.tau ? 1 : 0;
  return out;
}

struct Priors {
  double pi0 = 0.5;
  double pi1 = 0.5;
};

/// R = C01 * pi1 * P(yhat=0 | y=1) + C10 * pi0 * P(yhat=1 | y=0), with the
/// conditional error rates estimated from the labeled sample.
inline double empirical_risk(std::span<const Label> y_true, std::span<const Label> y_pred, const CostMatrix& costs,
                             const Priors& priors) {
  if (y_true.size() != y_pred.size())
    throw LengthMismatch("y_true has " + std::to_string(y_true.size()) + " entries, y_pred " +
                         std::to_string(y_pred.size()));
  std::size_t pos = 0, neg = 0, misses = 0, false_alarms = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == 1) {
      ++pos;
      misses += y_pred[i] == 0 ? 1 : 0;
    } else {
      ++neg;
      false_alarms += y_pred[i] == 1 ? 1 : 0;
    }
  }
  if (pos == 0 || neg == 0) throw MissingClass("empirical risk needs both classes in y_true");
  const double md = static_cast<double>(misses) / static_cast<double>(pos);
  const double fa = static_cast<double>(false_alarms) / static_cast<double>(neg);
  return costs.c01() * priors.pi1 * md + costs.c10() * priors.pi0 * fa;
}

}  // namespace imbalance
