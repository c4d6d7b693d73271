#include "fimest/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <string>
#include <vector>

#include "fimest/errors.hpp"

namespace fimest {

double sample_mean(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("sample_mean: no values");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) throw InvalidInput("sample_variance: need at least 2 values");
  const double mean = sample_mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size() - 1);
}

MeanInterval mean_ci(std::span<const double> values, double level) {
  if (values.size() < 2) throw InvalidInput("mean_ci: need at least 2 values, got " + std::to_string(values.size()));
  if (!(level > 0.0 && level < 1.0)) throw InvalidInput("mean_ci: level must lie in (0, 1)");
  const double n = static_cast<double>(values.size());
  const double mean = sample_mean(values);
  const double se = std::sqrt(sample_variance(values) / n);
  const boost::math::students_t dist(n - 1.0);
  const double half = boost::math::quantile(dist, 0.5 * (1.0 + level)) * se;
  return {mean, mean - half, mean + half};
}

namespace {

TTestResult from_statistic(double mean_difference, double se, double dof) {
  TTestResult r;
  r.dof = dof;
  if (!(se > 0.0)) {
    r.degenerate = true;
    r.statistic = mean_difference > 0.0 ? INFINITY : (mean_difference < 0.0 ? -INFINITY : 0.0);
    r.p_value = mean_difference > 0.0 ? 0.0 : (mean_difference < 0.0 ? 1.0 : 0.5);
    return r;
  }
  r.statistic = mean_difference / se;
  const boost::math::students_t dist(dof);
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

}  // namespace

TTestResult one_sided_t_test(std::span<const double> a, std::span<const double> b, bool paired) {
  if (a.size() < 2 || b.size() < 2) throw InvalidInput("one_sided_t_test: need at least 2 values per sample");
  if (paired) {
    if (a.size() != b.size())
      throw InvalidInput("one_sided_t_test: paired samples differ in length (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    const double n = static_cast<double>(diff.size());
    return from_statistic(sample_mean(diff), std::sqrt(sample_variance(diff) / n), n - 1.0);
  }
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double va = sample_variance(a) / na, vb = sample_variance(b) / nb;
  const double se2 = va + vb;
  const double dof = se2 > 0.0 ? se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0)) : na + nb - 2.0;
  return from_statistic(sample_mean(a) - sample_mean(b), std::sqrt(se2), dof);
}

}  // namespace fimest
