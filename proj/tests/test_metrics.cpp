#include <gtest/gtest.h>

#include <random>

#include "imbalance/metrics.hpp"
#include "imbalance/synthetic.hpp"
#include "oracles.hpp"

using namespace imbalance;

namespace {

SoftScores tied_scores(std::mt19937_64& gen, std::size_t n, int levels) {
  std::uniform_int_distribution<int> d(0, levels);
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<double>(d(gen)) / levels;
  return SoftScores(v);
}

// Scores p ~ U(0,1) with labels y ~ Bernoulli(link(p)).
template <class Link>
std::pair<SoftScores, std::vector<Label>> bernoulli_fixture(std::size_t n, std::uint64_t seed, Link link) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> s(n);
  std::vector<Label> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = u(gen);
    y[i] = u(gen) < link(s[i]) ? 1 : 0;
  }
  return {SoftScores(s), y};
}

}  // namespace

TEST(Evaluate, Fixtures) {
  const std::vector<Label> y{0, 0, 1, 1};
  const auto perfect = evaluate(y, y);
  EXPECT_EQ(perfect.balanced, 1.0);
  EXPECT_EQ(perfect.worst_class, 1.0);
  EXPECT_EQ(perfect.prob_error, 0.0);

  const auto majority = evaluate(y, std::vector<Label>{0, 0, 0, 0});
  EXPECT_EQ(majority.acc_class0, 1.0);
  EXPECT_EQ(majority.acc_class1, 0.0);
  EXPECT_EQ(majority.balanced, 0.5);
  EXPECT_EQ(majority.worst_class, 0.0);

  std::vector<Label> t, p;
  for (int i = 0; i < 10; ++i) {
    t.push_back(0);
    p.push_back(i < 9 ? 0 : 1);
  }
  for (int i = 0; i < 10; ++i) {
    t.push_back(1);
    p.push_back(i < 7 ? 1 : 0);
  }
  const auto r = evaluate(t, p);
  EXPECT_DOUBLE_EQ(r.acc_class0, 0.9);
  EXPECT_DOUBLE_EQ(r.acc_class1, 0.7);
  EXPECT_DOUBLE_EQ(r.balanced, 0.8);
  EXPECT_DOUBLE_EQ(r.worst_class, 0.7);
  EXPECT_DOUBLE_EQ(r.average, 0.8);
  EXPECT_EQ(r.confusion, (Confusion{7, 1, 9, 3}));
}

TEST(Evaluate, Errors) {
  EXPECT_THROW(evaluate(std::vector<Label>{0, 1}, std::vector<Label>{0}), LengthMismatch);
  EXPECT_THROW(evaluate(std::vector<Label>{1, 1}, std::vector<Label>{0, 1}), MissingClass);
}

TEST(Roc, PerfectAndConstantScores) {
  const std::vector<Label> y{0, 0, 1, 1};
  const auto perfect = roc_curve(SoftScores({0.1, 0.2, 0.8, 0.9}), y);
  EXPECT_EQ(perfect.auc, 1.0);
  const auto flat = roc_curve(SoftScores({0.3, 0.3, 0.3, 0.3}), y);
  EXPECT_EQ(flat.auc, 0.5);
  ASSERT_EQ(flat.points.size(), 2u);
  EXPECT_EQ(flat.points.back().fa_rate, 1.0);
  EXPECT_EQ(flat.points.back().detection_rate, 1.0);
  EXPECT_THROW(roc_curve(SoftScores({0.1, 0.2}), std::vector<Label>{1, 1}), MissingClass);
}

TEST(Roc, MatchesPairCountingWithTies) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + gen() % 300;
    const auto y = oracle::random_labels(gen, n, 0.1 + 0.8 * (trial % 10) / 10.0);
    const auto s = tied_scores(gen, n, 1 + trial % 20);
    const auto curve = roc_curve(s, y);
    EXPECT_NEAR(curve.auc, oracle::pair_count_auc(s.values(), y), 1e-12);
    EXPECT_EQ(curve.points.front().fa_rate, 0.0);
    EXPECT_EQ(curve.points.front().detection_rate, 0.0);
    EXPECT_EQ(curve.points.back().fa_rate, 1.0);
    EXPECT_EQ(curve.points.back().detection_rate, 1.0);
    for (std::size_t k = 1; k < curve.points.size(); ++k) {
      EXPECT_GE(curve.points[k].fa_rate, curve.points[k - 1].fa_rate);
      EXPECT_GE(curve.points[k].detection_rate, curve.points[k - 1].detection_rate);
      EXPECT_LT(curve.thresholds[k], curve.thresholds[k - 1]);
    }
  }
}

TEST(OperatingPoint, CurveLookupMatchesDirect) {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 10 + gen() % 200;
    const auto y = oracle::random_labels(gen, n, 0.3);
    const auto s = tied_scores(gen, n, 10);
    const auto curve = roc_curve(s, y);
    for (int i = 0; i <= 40; ++i) {
      const auto rule = ThresholdRule::fixed(i / 40.0);
      const auto a = operating_point(curve, rule), b = operating_point(s, y, rule);
      EXPECT_NEAR(a.fa_rate, b.fa_rate, 1e-12) << rule.tau;
      EXPECT_NEAR(a.md_rate, b.md_rate, 1e-12) << rule.tau;
    }
  }
}

TEST(OperatingPoint, Boundaries) {
  const std::vector<Label> y{0, 0, 1, 1};
  const SoftScores perfect({0.1, 0.2, 0.8, 0.9});
  const auto p = operating_point(perfect, y, ThresholdRule::standard());
  EXPECT_EQ(p.fa_rate, 0.0);
  EXPECT_EQ(p.md_rate, 0.0);
  const auto zero = operating_point(perfect, y, ThresholdRule::fixed(0.0));
  EXPECT_EQ(zero.fa_rate, 1.0);
  EXPECT_EQ(zero.md_rate, 0.0);
}

TEST(OperatingPoint, GaussianOracleRates) {
  const std::size_t n = 20000;
  const auto d = synthetic::two_gaussian(n, n, 1, 77);
  std::vector<double> s(d.n());
  for (std::size_t i = 0; i < d.n(); ++i) s[i] = synthetic::two_gaussian_posterior(d.features.row(i), 0.1);
  const SoftScores scores(s);
  auto expected = [](double tau) {
    const double c = oracle::two_gaussian_sum_cut(tau, 0.1);
    return OperatingPoint{1.0 - oracle::normal_cdf(c + 1.0), oracle::normal_cdf(c - 1.0)};
  };
  const auto at_half = operating_point(scores, d.labels, ThresholdRule::standard());
  const auto at_prior = operating_point(scores, d.labels, bayes_threshold(0.1));
  for (auto [got, tau] : {std::pair{at_half, 0.5}, std::pair{at_prior, 0.1}}) {
    EXPECT_NEAR(got.fa_rate, expected(tau).fa_rate, 0.01) << tau;
    EXPECT_NEAR(got.md_rate, expected(tau).md_rate, 0.01) << tau;
  }
  EXPECT_LT(at_prior.md_rate, at_half.md_rate - 0.3);
  EXPECT_GT(at_prior.fa_rate, at_half.fa_rate + 0.1);
}

TEST(BestThreshold, SeparatedAndConstant) {
  const std::vector<Label> y{0, 0, 1, 1};
  const auto sep = best_balanced_threshold(SoftScores({0.1, 0.2, 0.8, 0.9}), y);
  EXPECT_EQ(sep.balanced, 1.0);
  EXPECT_DOUBLE_EQ(sep.tau, 0.5);
  const auto flat = best_balanced_threshold(SoftScores({0.4, 0.4, 0.4, 0.4}), y);
  EXPECT_EQ(flat.balanced, 0.5);
  EXPECT_EQ(flat.tau, 0.4);
}

TEST(BestThreshold, NeverBelowStandardRuleAndMatchesGrid) {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 4 + gen() % 150;
    const auto y = oracle::random_labels(gen, n, 0.25);
    const auto s = tied_scores(gen, n, 1 + trial % 30);
    const auto best = best_balanced_threshold(s, y);
    EXPECT_GE(best.balanced, evaluate(y, apply_threshold(s, ThresholdRule::standard())).balanced);
    EXPECT_NEAR(evaluate(y, apply_threshold(s, {best.tau, ThresholdSource::SweepOptimal})).balanced, best.balanced,
                1e-12);
    // candidates: midpoints of consecutive distinct scores, then the maximum
    std::vector<double> d(s.begin(), s.end());
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end()), d.end());
    std::vector<double> candidates;
    for (std::size_t i = 0; i + 1 < d.size(); ++i) candidates.push_back(0.5 * (d[i] + d[i + 1]));
    candidates.push_back(d.back());
    double grid_best = -1, grid_tau = 0;
    for (double t : candidates) {
      const double b = oracle::balanced_accuracy(y, apply_threshold(s, {t, ThresholdSource::Fixed}));
      if (b > grid_best + 1e-12) {
        grid_best = b;
        grid_tau = t;
      }
    }
    EXPECT_NEAR(best.balanced, grid_best, 1e-12);
    EXPECT_NEAR(best.tau, grid_tau, 1e-12);
  }
}

TEST(Calibration, BernoulliScoresAreCalibrated) {
  const auto [s, y] = bernoulli_fixture(20000, 1, [](double p) { return p; });
  const auto c = calibration_curve(s, y);
  EXPECT_EQ(c.bins.size(), 10u);
  EXPECT_LT(c.ece, 0.02);
  EXPECT_EQ(c.diagnosis, CalibrationDiagnosis::Calibrated);
  std::size_t total = 0;
  for (const auto& b : c.bins) total += b.count;
  EXPECT_EQ(total, 20000u);
}

TEST(Calibration, LabelsShiftedTowardClassZero) {
  // odds divided by 9: every bin observes fewer positives than predicted,
  // i.e. the scores overstate class 1
  const auto [s, y] = bernoulli_fixture(20000, 2, [](double p) { return p / (p + 9.0 * (1.0 - p)); });
  const auto c = calibration_curve(s, y);
  for (const auto& b : c.bins)
    if (b.count) {
      EXPECT_LT(b.observed_freq, b.mean_predicted);
    }
  EXPECT_LT(mean_calibration_gap(c), 0.0);
  EXPECT_EQ(c.diagnosis, CalibrationDiagnosis::Class1Biased);
}

TEST(Calibration, LabelsShiftedTowardClassOne) {
  // the majority-biased regime: scores understate class 1
  const auto [s, y] = bernoulli_fixture(20000, 3, [](double p) { return 9.0 * p / (9.0 * p + (1.0 - p)); });
  const auto c = calibration_curve(s, y);
  for (const auto& b : c.bins)
    if (b.count) {
      EXPECT_GT(b.observed_freq, b.mean_predicted);
    }
  EXPECT_GT(mean_calibration_gap(c), 0.0);
  EXPECT_EQ(c.diagnosis, CalibrationDiagnosis::Class0Biased);
}

TEST(Calibration, ConfidenceRegimes) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> under, over;
  std::vector<Label> y;
  for (int i = 0; i < 20000; ++i) {
    const double p = u(gen);
    y.push_back(u(gen) < p ? 1 : 0);
    under.push_back(0.5 + 0.4 * (p - 0.5));
    over.push_back(p < 0.5 ? 0.5 * std::pow(2 * p, 3) : 1 - 0.5 * std::pow(2 * (1 - p), 3));
  }
  EXPECT_EQ(calibration_curve(SoftScores(under), y).diagnosis, CalibrationDiagnosis::Underconfident);
  EXPECT_EQ(calibration_curve(SoftScores(over), y).diagnosis, CalibrationDiagnosis::Overconfident);
}

TEST(Calibration, SingleBinAndErrors) {
  const std::vector<Label> y{0, 1, 1, 0};
  const auto c = calibration_curve(SoftScores({0.91, 0.93, 0.95, 0.97}), y);
  std::size_t nonempty = 0;
  for (const auto& b : c.bins) nonempty += b.count ? 1 : 0;
  EXPECT_EQ(nonempty, 1u);
  EXPECT_NEAR(c.ece, std::abs(0.5 - 0.94), 1e-12);
  EXPECT_TRUE(std::isnan(c.bins[0].mean_predicted));
  EXPECT_EQ(calibration_curve(SoftScores({1.0}), std::vector<Label>{1}).bins.back().count, 1u);
  EXPECT_THROW(calibration_curve(SoftScores(), std::vector<Label>{}), EmptyInput);
  EXPECT_THROW(calibration_curve(SoftScores({0.5}), std::vector<Label>{1}, 1), std::invalid_argument);
}

TEST(AverageCurves, IdentityDisjointAndPooled) {
  const auto [s, y] = bernoulli_fixture(3000, 5, [](double p) { return p * p; });
  const auto c = calibration_curve(s, y);
  const std::vector<CalibrationCurve> twice{c, c};
  const auto self = average_curves(twice);
  for (std::size_t b = 0; b < c.bins.size(); ++b) {
    EXPECT_EQ(self.bins[b].count, 2 * c.bins[b].count);
    EXPECT_NEAR(self.bins[b].mean_predicted, c.bins[b].mean_predicted, 1e-12);
    EXPECT_NEAR(self.bins[b].observed_freq, c.bins[b].observed_freq, 1e-12);
  }
  EXPECT_NEAR(self.ece, c.ece, 1e-12);

  const auto low = calibration_curve(SoftScores({0.05, 0.15}), std::vector<Label>{0, 1});
  const auto high = calibration_curve(SoftScores({0.85}), std::vector<Label>{1});
  const std::vector<CalibrationCurve> parts{low, high};
  const auto un = average_curves(parts);
  EXPECT_EQ(un.bins[0].mean_predicted, 0.05);
  EXPECT_EQ(un.bins[1].observed_freq, 1.0);
  EXPECT_EQ(un.bins[8].mean_predicted, 0.85);
  EXPECT_EQ(un.bins[5].count, 0u);

  // pooling raw pairs and re-binning gives the same curve
  const auto [s2, y2] = bernoulli_fixture(2000, 6, [](double p) { return std::sqrt(p); });
  std::vector<double> all(s.begin(), s.end());
  all.insert(all.end(), s2.begin(), s2.end());
  std::vector<Label> ally = y;
  ally.insert(ally.end(), y2.begin(), y2.end());
  const std::vector<CalibrationCurve> two{c, calibration_curve(s2, y2)};
  const auto avg = average_curves(two);
  const auto pooled = calibration_curve(SoftScores(all), ally);
  for (std::size_t b = 0; b < pooled.bins.size(); ++b) {
    EXPECT_EQ(avg.bins[b].count, pooled.bins[b].count);
    EXPECT_NEAR(avg.bins[b].mean_predicted, pooled.bins[b].mean_predicted, 1e-12);
    EXPECT_NEAR(avg.bins[b].observed_freq, pooled.bins[b].observed_freq, 1e-12);
  }
  EXPECT_NEAR(avg.ece, pooled.ece, 1e-12);

  const std::vector<CalibrationCurve> mismatched{c, calibration_curve(s, y, 5)};
  EXPECT_THROW(average_curves(mismatched), BinMismatch);
  EXPECT_THROW(average_curves(std::vector<CalibrationCurve>{}), EmptyInput);
}

TEST(Properties, BalancedEqualsOneMinusUnitRiskAndWorstIsMin) {
  std::mt19937_64 gen(101);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + gen() % 100;
    const auto y = oracle::random_labels(gen, n, 0.4);
    const auto yhat = oracle::random_labels(gen, n, 0.5);
    const auto r = evaluate(y, yhat);
    EXPECT_NEAR(r.balanced, 1.0 - empirical_risk(y, yhat, CostMatrix::unit(), {0.5, 0.5}), 1e-12);
    EXPECT_EQ(r.worst_class, std::min(r.acc_class0, r.acc_class1));
    EXPECT_NEAR(r.balanced, oracle::balanced_accuracy(y, yhat), 1e-15);
  }
}

TEST(Properties, ConstantPriorScoreIsCalibrated) {
  std::mt19937_64 gen(55);
  std::bernoulli_distribution coin(0.2);
  std::vector<Label> y(10000);
  for (auto& v : y) v = coin(gen) ? 1 : 0;
  const auto c = calibration_curve(SoftScores(std::vector<double>(y.size(), 0.2)), y);
  EXPECT_LT(c.ece, 0.02);
}
