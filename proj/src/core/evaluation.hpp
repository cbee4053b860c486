#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gemix {

/// counts[t][p]: rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::vector<std::vector<long long>> counts;

  int classes() const noexcept { return static_cast<int>(counts.size()); }
  long long total() const noexcept;
  long long row_sum(int t) const;
  long long column_sum(int p) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

struct MacroMetrics {
  double precision = 0.0;  // unweighted class mean
  double recall = 0.0;     // unweighted class mean
  double f1 = 0.0;         // harmonic mean of the two macro values above
  std::vector<ClassMetrics> per_class;
};

/// Arg-max decision, lowest index wins ties.
int decide(std::span<const double> probs);

ConfusionMatrix confusion_matrix(const std::vector<std::vector<double>>& pred_probs,
                                 const std::vector<int>& true_labels, int classes);

/// Zero denominators give 0 for that metric.
MacroMetrics macro_prf(const ConfusionMatrix& cm);

/// FN / (TP + FN) for the positive class (row sum minus diagonal over row sum).
double false_negative_rate(const ConfusionMatrix& cm, int positive);

struct MetricsReport {
  std::string setup;
  std::string backbone;
  double macro_p = 0.0;
  double macro_r = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassMetrics> per_class;
  ConfusionMatrix confusion;
  double fn_rate = 0.0;
  int positive_class = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

MetricsReport make_report(std::string setup, std::string backbone, const ConfusionMatrix& cm,
                          int positive_class);

void write_report(const MetricsReport& report, const std::filesystem::path& path);
/// Throws Error(format) when a required field is missing or mistyped.
MetricsReport read_report(const std::filesystem::path& path);

/// "Real+GeMix 0.914 0.910 0.911"
std::string render_table_row(const MetricsReport& report);

/// Columns Model | Setup | P | R | F1, grouped by backbone, setups in the
/// canonical regime order (unknown setups last, by name).
std::string render_table(const std::vector<MetricsReport>& reports);

}  // namespace gemix
