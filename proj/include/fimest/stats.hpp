#pragma once

#include <span>

namespace fimest {

struct MeanInterval {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Student-t interval mean +- t_{(1+level)/2, R-1} s / sqrt(R). Needs >= 2 values.
MeanInterval mean_ci(std::span<const double> values, double level = 0.95);

struct TTestResult {
  double p_value = 0.5;
  double statistic = 0.0;
  double dof = 0.0;
  /// Zero standard error: the p-value comes from the sign of the mean
  /// difference (0, 1, or 0.5 when the difference is also zero).
  bool degenerate = false;
};

/// One-sided test of H1: mean(a) > mean(b). Paired mode tests the differences
/// a - b; unpaired mode uses Welch's statistic with Welch-Satterthwaite
/// degrees of freedom. Returns the upper-tail p-value.
TTestResult one_sided_t_test(std::span<const double> a, std::span<const double> b, bool paired);

double sample_mean(std::span<const double> values);
/// Unbiased (n - 1) sample variance.
double sample_variance(std::span<const double> values);

}  // namespace fimest
