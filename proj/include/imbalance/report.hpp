#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "imbalance/csv.hpp"
#include "imbalance/experiment.hpp"
#include "imbalance/metrics.hpp"

namespace imbalance {

inline constexpr const char* kResultColumns =
    "dataset,n,pi1,method,seed,context_rows,tp,fp,tn,fn,acc_class0,acc_class1,balanced,worst_class,average,"
    "prob_error,auc,error_kind,error_message";

/// One line per row, fixed column order. Metric columns are empty for error
/// rows. Contains no timing data, so identical runs give identical bytes.
inline void write_results_csv(std::ostream& out, std::span<const ResultRow> rows) {
  out << kResultColumns << '\n';
  for (const auto& r : rows) {
    out << csv::escape(r.dataset) << ',' << r.n << ',' << format_number(r.pi1) << ',' << to_string(r.method) << ','
        << r.seed << ',';
    if (r.ok()) {
      const auto& e = *r.report;
      const auto& c = e.confusion;
      out << r.context_rows << ',' << c.tp << ',' << c.fp << ',' << c.tn << ',' << c.fn << ','
          << format_number(e.acc_class0) << ',' << format_number(e.acc_class1) << ',' << format_number(e.balanced)
          << ',' << format_number(e.worst_class) << ',' << format_number(e.average) << ','
          << format_number(e.prob_error) << ',' << format_number(r.auc) << ",,";
    } else {
      out << ",,,,,,,,,,,," << csv::escape(r.error_kind) << ',' << csv::escape(r.error_message);
    }
    out << '\n';
  }
}

inline void write_timings_csv(std::ostream& out, std::span<const ResultRow> rows) {
  out << "dataset,n,pi1,method,seed,context_rows,wall_time_s\n";
  for (const auto& r : rows) {
    if (!r.ok()) continue;
    out << csv::escape(r.dataset) << ',' << r.n << ',' << format_number(r.pi1) << ',' << to_string(r.method) << ','
        << r.seed << ',' << r.context_rows << ',' << format_number(r.wall_time) << '\n';
  }
}

namespace detail {
inline std::string fixed3(double v) {
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}
}  // namespace detail

/// Markdown table with one row per dataset plus the Average row, and a
/// (Bal., WCA) column pair per method. The best value of each row is bold.
/// Expects rows aggregated over {Dataset, Method}.
inline void write_table_markdown(std::ostream& out, std::span<const AggregateRow> rows, std::span<const Method> methods) {
  std::vector<std::string> datasets;
  for (const auto& r : rows)
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) datasets.push_back(r.dataset);
  // keep the Average row last
  std::stable_partition(datasets.begin(), datasets.end(), [](const auto& d) { return d != kAverageLabel; });

  out << "| Dataset |";
  for (Method m : methods) out << ' ' << table_label(m) << " Bal. | " << table_label(m) << " WCA |";
  out << "\n|---|";
  for (std::size_t i = 0; i < methods.size(); ++i) out << "---:|---:|";
  out << '\n';

  for (const auto& d : datasets) {
    std::vector<double> bal, wca;
    for (Method m : methods) {
      auto it = std::find_if(rows.begin(), rows.end(), [&](const AggregateRow& r) {
        return r.dataset == d && r.method == m && !r.n && !r.pi1;
      });
      bal.push_back(it == rows.end() ? std::nan("") : it->means.balanced);
      wca.push_back(it == rows.end() ? std::nan("") : it->means.worst_class);
    }
    auto best = [](const std::vector<double>& v) {
      double b = -1.0;
      for (double x : v)
        if (!std::isnan(x)) b = std::max(b, std::round(x * 1000.0));
      return b;
    };
    const double best_bal = best(bal), best_wca = best(wca);
    auto cell = [](double v, double best_v) {
      const auto s = detail::fixed3(v);
      return !std::isnan(v) && std::round(v * 1000.0) == best_v ? "**" + s + "**" : s;
    };
    out << "| " << (d == kAverageLabel ? "**Average**" : d) << " |";
    for (std::size_t i = 0; i < methods.size(); ++i)
      out << ' ' << cell(bal[i], best_bal) << " | " << cell(wca[i], best_wca) << " |";
    out << '\n';
  }
}

inline void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  out << (sweep.axis == SweepAxis::Threshold ? "tau" : "n0")
      << ",acc_class0,acc_class1,balanced,worst_class,average,prob_error\n";
  for (std::size_t i = 0; i < sweep.axis_values.size(); ++i) {
    const auto& e = sweep.reports[i];
    out << format_number(sweep.axis_values[i]) << ',' << format_number(e.acc_class0) << ','
        << format_number(e.acc_class1) << ',' << format_number(e.balanced) << ',' << format_number(e.worst_class)
        << ',' << format_number(e.average) << ',' << format_number(e.prob_error) << '\n';
  }
}

/// ROC curve as (x, y, threshold) = (false-alarm rate, detection rate, tau).
inline void write_roc_csv(std::ostream& out, const RocCurve& curve) {
  out << "x,y,threshold\n";
  for (std::size_t i = 0; i < curve.points.size(); ++i)
    out << format_number(curve.points[i].fa_rate) << ',' << format_number(curve.points[i].detection_rate) << ','
        << format_number(curve.thresholds[i]) << '\n';
}

inline void write_calibration_csv(std::ostream& out, const CalibrationCurve& curve) {
  out << "bin_lo,bin_hi,mean_predicted,observed_freq,count\n";
  for (const auto& b : curve.bins)
    out << format_number(b.lo) << ',' << format_number(b.hi) << ',' << format_number(b.mean_predicted) << ','
        << format_number(b.observed_freq) << ',' << b.count << '\n';
}

}  // namespace imbalance
