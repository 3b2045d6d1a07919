#include "sheetwalk/stats.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace sheetwalk {

namespace {

constexpr std::size_t kMinKsSamples = 10;

Eigen::Map<const Eigen::ArrayXd> as_array(std::span<const double> x) {
  return {x.data(), static_cast<Eigen::Index>(x.size())};
}

void require_size(std::span<const double> x, std::size_t minimum, const char* who) {
  if (x.size() < minimum)
    throw std::invalid_argument(std::string(who) + ": needs at least " +
                                std::to_string(minimum) + " samples");
}

double ks_p_value(double statistic, double effective_n) {
  const double root = std::sqrt(effective_n);
  return kolmogorov_survival((root + 0.12 + 0.11 / root) * statistic);
}

} // namespace

SampleSummary summarize(std::span<const double> samples) {
  require_size(samples, 1, "summarize");
  const auto x = as_array(samples);
  SampleSummary s;
  s.count = samples.size();
  s.mean = x.mean();
  s.variance = s.count > 1 ? (x - s.mean).square().sum() / static_cast<double>(s.count - 1)
                           : 0.0;
  s.min = x.minCoeff();
  s.max = x.maxCoeff();
  return s;
}

bool Estimate::within(double target, double k) const {
  return std::fabs(value - target) <= k * standard_error;
}

Estimate mean_estimate(std::span<const double> samples) {
  require_size(samples, 2, "mean_estimate");
  const auto s = summarize(samples);
  return {s.mean, std::sqrt(s.variance / static_cast<double>(s.count))};
}

Estimate variance_estimate(std::span<const double> samples) {
  require_size(samples, 2, "variance_estimate");
  const auto x = as_array(samples);
  const double n = static_cast<double>(samples.size());
  const Eigen::ArrayXd sq = (x - x.mean()).square();
  const double variance = sq.sum() / (n - 1.0);
  const double spread = std::sqrt((sq - sq.mean()).square().sum() / (n - 1.0));
  return {variance, spread / std::sqrt(n)};
}

double median(std::span<const double> samples) {
  require_size(samples, 1, "median");
  std::vector<double> v(samples.begin(), samples.end());
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double kolmogorov_survival(double x) {
  if (x <= 0.0)
    return 1.0;
  if (x < 1.18) {
    // Theta-function form of the CDF converges fast for small x.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double cdf = 0.0;
    for (int k = 1; k <= 8; ++k) {
      const double odd = 2.0 * k - 1.0;
      cdf += std::exp(-odd * odd * pi2 / (8.0 * x * x));
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / x;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17)
      break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KSResult ks_test(std::span<const double> samples, const Cdf& reference) {
  require_size(samples, kMinKsSamples, "ks_test");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double statistic = 0.0;
  double previous = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = reference(sorted[i]);
    if (!(f >= 0.0 && f <= 1.0) || f < previous)
      throw std::invalid_argument("ks_test: reference CDF is not a monotone map into [0, 1]");
    previous = f;
    const double below = static_cast<double>(i) / n;
    const double above = static_cast<double>(i + 1) / n;
    statistic = std::max({statistic, above - f, f - below});
  }
  return {statistic, ks_p_value(statistic, n), sorted.size()};
}

KSResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  require_size(a, kMinKsSamples, "ks_two_sample");
  require_size(b, kMinKsSamples, "ks_two_sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double statistic = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v)
      ++i;
    while (j < y.size() && y[j] == v)
      ++j;
    statistic = std::max(statistic, std::fabs(static_cast<double>(i) / nx -
                                              static_cast<double>(j) / ny));
  }
  return {statistic, ks_p_value(statistic, nx * ny / (nx + ny)), x.size() + y.size()};
}

Estimate empirical_covariance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("empirical_covariance: mismatched sample lengths");
  require_size(x, 30, "empirical_covariance");
  const auto xa = as_array(x);
  const auto ya = as_array(y);
  const double n = static_cast<double>(x.size());
  const Eigen::ArrayXd products = (xa - xa.mean()) * (ya - ya.mean());
  const double covariance = products.sum() / (n - 1.0);
  const double spread = std::sqrt((products - products.mean()).square().sum() / (n - 1.0));
  return {covariance, spread / std::sqrt(n)};
}

LogLogFit loglog_slope(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("loglog_slope: mismatched lengths");
  if (xs.size() < 3)
    throw std::invalid_argument("loglog_slope: needs at least 3 points");
  const auto xa = as_array(xs);
  const auto ya = as_array(ys);
  if ((xa <= 0.0).any() || (ya <= 0.0).any() || !xa.isFinite().all() ||
      !ya.isFinite().all())
    throw std::invalid_argument("loglog_slope: entries must be positive and finite");

  const Eigen::Index m = xa.size();
  Eigen::MatrixXd design(m, 2);
  design.col(0).setOnes();
  design.col(1) = xa.log().matrix();
  const Eigen::VectorXd target = ya.log().matrix();
  const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(target);

  const Eigen::VectorXd residual = target - design * coef;
  const double total = (target.array() - target.mean()).square().sum();
  LogLogFit fit;
  fit.intercept = coef[0];
  fit.slope = coef[1];
  fit.r_squared = total > 0.0 ? 1.0 - residual.squaredNorm() / total : 1.0;
  return fit;
}

Cdf normal_cdf(double mean, double variance) {
  if (!(variance > 0.0))
    throw std::invalid_argument("normal_cdf: variance must be positive");
  const double scale = std::sqrt(2.0 * variance);
  return [mean, scale](double x) { return 0.5 * std::erfc(-(x - mean) / scale); };
}

Cdf exp_cdf(double rate) {
  if (!(rate > 0.0))
    throw std::invalid_argument("exp_cdf: rate must be positive");
  return [rate](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-rate * x); };
}

Cdf symmetric_exp_cdf(double rate) {
  if (!(rate > 0.0))
    throw std::invalid_argument("symmetric_exp_cdf: rate must be positive");
  return [rate](double x) {
    return x < 0.0 ? 0.5 * std::exp(rate * x) : 1.0 - 0.5 * std::exp(-rate * x);
  };
}

namespace {

struct KronrodResult {
  double value;
  double error;
};

KronrodResult gauss_kronrod_15(const std::function<double(double)>& f, double a, double b) {
  static constexpr std::array<double, 8> nodes = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
  static constexpr std::array<double, 8> kronrod = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr std::array<double, 4> gauss = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double k_sum = kronrod[7] * fc;
  double g_sum = gauss[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * nodes[static_cast<std::size_t>(i)];
    const double pair = f(center - dx) + f(center + dx);
    k_sum += kronrod[static_cast<std::size_t>(i)] * pair;
    if (i % 2 == 1)
      g_sum += gauss[static_cast<std::size_t>(i / 2)] * pair;
  }
  return {k_sum * half, std::fabs((k_sum - g_sum) * half)};
}

double adapt(const std::function<double(double)>& f, double a, double b,
             double tolerance, int depth) {
  const auto r = gauss_kronrod_15(f, a, b);
  // Below the rounding floor further bisection cannot reduce the estimate.
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::fabs(r.value);
  if (r.error <= std::max(tolerance, floor) || depth >= 50)
    return r.value;
  const double mid = 0.5 * (a + b);
  return adapt(f, a, mid, 0.5 * tolerance, depth + 1) +
         adapt(f, mid, b, 0.5 * tolerance, depth + 1);
}

} // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double tolerance) {
  if (!(tolerance > 0.0))
    throw std::invalid_argument("integrate_adaptive: tolerance must be positive");
  if (a == b)
    return 0.0;
  return adapt(f, a, b, tolerance, 0);
}

} // namespace sheetwalk
