#ifndef SHEETWALK_STATS_HPP
#define SHEETWALK_STATS_HPP

#include <cstddef>
#include <functional>
#include <span>

namespace sheetwalk {

using Cdf = std::function<double(double)>;

struct SampleSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0; // unbiased
  double min = 0.0;
  double max = 0.0;
};

SampleSummary summarize(std::span<const double> samples);

/// A Monte Carlo estimate with its standard error.
struct Estimate {
  double value = 0.0;
  double standard_error = 0.0;

  /// |value - target| <= k * standard_error
  bool within(double target, double k = 3.0) const;
};

Estimate mean_estimate(std::span<const double> samples);

/// Unbiased sample variance; the SE is the sample standard deviation of the
/// squared deviations over sqrt(count).
Estimate variance_estimate(std::span<const double> samples);

double median(std::span<const double> samples);

struct KSResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t sample_size = 0;
};

/// Kolmogorov limit distribution, P(K > x).
double kolmogorov_survival(double x);

/// One-sample Kolmogorov-Smirnov test; asymptotic p-value with the
/// Stephens small-sample adjustment. Refuses fewer than 10 samples.
KSResult ks_test(std::span<const double> samples, const Cdf& reference);

/// Two-sample KS with effective size n1*n2/(n1+n2).
KSResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Unbiased covariance; SE from the sample deviation of the centered products.
Estimate empirical_covariance(std::span<const double> x, std::span<const double> y);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Least-squares fit of log(y) = intercept + slope * log(x).
LogLogFit loglog_slope(std::span<const double> xs, std::span<const double> ys);

Cdf normal_cdf(double mean, double variance);
Cdf exp_cdf(double rate);

/// CDF of K * E with K = +-1 fair and E ~ Exp(rate).
Cdf symmetric_exp_cdf(double rate);

/// Adaptive Gauss-Kronrod (7/15) quadrature to absolute tolerance.
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double tolerance);

} // namespace sheetwalk

#endif
