#include "sheetwalk/sheet.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "sheetwalk/errors.hpp"

namespace sheetwalk {

namespace {

std::int64_t checked_power(std::int64_t base, int exponent) {
  std::int64_t result = 1;
  for (int i = 0; i < exponent; ++i) {
    if (result > std::numeric_limits<std::int64_t>::max() / base)
      throw ConfigError("strip count overflows");
    result *= base;
  }
  return result;
}

void check_unit(double v, const char* who) {
  if (!(v >= 0.0 && v <= 1.0)) {
    std::ostringstream msg;
    msg << who << ": coordinate " << v << " outside [0, 1]";
    throw std::domain_error(msg.str());
  }
}

/// Weighted sum of strip values over the box below the evaluation point,
/// visited in row-major order. Shared by every evaluation route so they agree
/// bitwise.
template <typename ValueOf>
double weighted_strip_sum(std::span<const AxisWeight> weights, std::int64_t strips,
                          ValueOf&& value_of) {
  const std::size_t axes = weights.size();
  std::vector<std::int64_t> upper(axes);
  for (std::size_t i = 0; i < axes; ++i) {
    upper[i] = weights[i].full + (weights[i].fraction != 0.0 ? 1 : 0);
    if (upper[i] == 0)
      return 0.0;
  }
  std::vector<std::int64_t> k(axes, 1);
  double sum = 0.0;
  for (;;) {
    double weight = 1.0;
    std::size_t flat = 0;
    for (std::size_t i = 0; i < axes; ++i) {
      weight *= k[i] <= weights[i].full ? 1.0 : weights[i].fraction;
      flat = flat * static_cast<std::size_t>(strips) + static_cast<std::size_t>(k[i] - 1);
    }
    sum += weight * value_of(flat);

    std::size_t i = axes;
    while (i > 0) {
      --i;
      if (++k[i] <= upper[i])
        break;
      k[i] = 1;
      if (i == 0)
        return sum;
    }
  }
}

} // namespace

std::vector<std::string> validate(const SheetParams& params) {
  std::vector<std::string> warnings;
  if (params.n < 1)
    throw ConfigError("n: must be a positive integer");
  if (params.d < 2)
    throw ConfigError("d: must be at least 2");
  if (!std::isfinite(params.lambda) || params.lambda <= 0.0)
    throw ConfigError("lambda: must be finite and positive");
  const double theorem_bound = 1.0 / (5.0 * (params.d - 1));
  if (params.mode == LambdaMode::theorem) {
    if (params.lambda >= theorem_bound) {
      std::ostringstream msg;
      msg << "lambda: " << params.lambda << " outside the convergence range (0, "
          << theorem_bound << ") for d = " << params.d
          << "; use exploratory mode to simulate anyway";
      throw ConfigError(msg.str());
    }
  } else {
    if (params.lambda >= 1.0)
      throw ConfigError("lambda: exploratory mode requires lambda in (0, 1)");
    if (params.lambda >= theorem_bound) {
      std::ostringstream msg;
      msg << "lambda " << params.lambda << " is outside (0, " << theorem_bound
          << "); almost-sure convergence is not guaranteed";
      warnings.push_back(msg.str());
    }
  }
  return warnings;
}

long double strip_density(std::int64_t n, double lambda) {
  const long double x = std::pow(static_cast<long double>(n), static_cast<long double>(lambda));
  const long double nearest = std::nearbyint(x);
  const long double ulp = std::nextafter(x, std::numeric_limits<long double>::infinity()) - x;
  return std::fabs(x - nearest) <= ulp ? nearest : x;
}

std::int64_t strips_per_axis(std::int64_t n, double lambda) {
  return static_cast<std::int64_t>(std::floor(strip_density(n, lambda)));
}

SheetApproximation::SheetApproximation(SheetParams params, Seed seed,
                                       std::vector<TransportPath> paths)
    : params_(params), seed_(seed), paths_(std::move(paths)) {
  strips_ = sheetwalk::strips_per_axis(params_.n, params_.lambda);
  if (strips_ < 1)
    throw std::logic_error("SheetApproximation: floor(n^lambda) < 1");
  density_ = static_cast<double>(strip_density(params_.n, params_.lambda));
  strip_scale_ = std::pow(static_cast<double>(params_.n),
                          -(params_.d - 1) * params_.lambda / 2.0);
  if (static_cast<std::int64_t>(paths_.size()) != checked_power(strips_, params_.d - 1))
    throw std::invalid_argument("SheetApproximation: wrong number of strip paths");
  for (const auto& p : paths_)
    if (p.n() != params_.n)
      throw std::invalid_argument("SheetApproximation: strip path intensity differs from n");
}

const TransportPath& SheetApproximation::path(std::span<const std::int64_t> multi_index) const {
  if (static_cast<int>(multi_index.size()) != params_.d - 1)
    throw std::invalid_argument("SheetApproximation::path: index rank must be d - 1");
  std::size_t flat = 0;
  for (auto k : multi_index) {
    if (k < 1 || k > strips_)
      throw std::out_of_range("SheetApproximation::path: strip index out of range");
    flat = flat * static_cast<std::size_t>(strips_) + static_cast<std::size_t>(k - 1);
  }
  return paths_[flat];
}

AxisWeight SheetApproximation::axis_weight(double s) const {
  check_unit(s, "axis_weight");
  const double x = s * density_;
  if (x >= static_cast<double>(strips_))
    return {strips_, 0.0};
  const double full = std::floor(x);
  return {static_cast<std::int64_t>(full), x - full};
}

SheetApproximation build_sheet(const SheetParams& params, Seed master_seed, unsigned workers) {
  validate(params);
  const std::int64_t m = strips_per_axis(params.n, params.lambda);
  if (m < 1)
    throw std::logic_error("build_sheet: floor(n^lambda) < 1");
  const std::int64_t count = checked_power(m, params.d - 1);

  std::vector<std::optional<TransportPath>> slots(static_cast<std::size_t>(count));
  parallel_for(slots.size(), workers, [&](std::size_t flat) {
    std::vector<std::uint64_t> index(static_cast<std::size_t>(params.d - 1));
    std::size_t rest = flat;
    for (std::size_t i = index.size(); i > 0; --i) {
      index[i - 1] = rest % static_cast<std::size_t>(m) + 1;
      rest /= static_cast<std::size_t>(m);
    }
    slots[flat] = TransportPath::sample(params.n, derive_seed(master_seed, "strip", index));
  });

  std::vector<TransportPath> paths;
  paths.reserve(slots.size());
  for (auto& s : slots)
    paths.push_back(std::move(*s));
  return SheetApproximation(params, master_seed, std::move(paths));
}

double sheet_value(const SheetApproximation& sheet, double s, double t) {
  if (sheet.params().d != 2)
    throw std::invalid_argument("sheet_value: sheet must have d = 2");
  check_unit(s, "sheet_value");
  check_unit(t, "sheet_value");
  const AxisWeight w = sheet.axis_weight(s);
  const auto& paths = sheet.paths();
  double sum = 0.0;
  for (std::int64_t k = 0; k < w.full; ++k)
    sum += transport_value(paths[static_cast<std::size_t>(k)], t);
  if (w.fraction != 0.0)
    sum += w.fraction * transport_value(paths[static_cast<std::size_t>(w.full)], t);
  return sheet.strip_scale() * sum;
}

double sheet_value_dparam(const SheetApproximation& sheet, std::span<const double> x) {
  const int d = sheet.params().d;
  if (static_cast<int>(x.size()) != d)
    throw std::invalid_argument("sheet_value_dparam: point must have d coordinates");
  for (double v : x)
    check_unit(v, "sheet_value_dparam");
  std::vector<AxisWeight> weights;
  weights.reserve(static_cast<std::size_t>(d - 1));
  for (int i = 0; i < d - 1; ++i)
    weights.push_back(sheet.axis_weight(x[static_cast<std::size_t>(i)]));
  const double t = x.back();
  const auto& paths = sheet.paths();
  const double sum = weighted_strip_sum(weights, sheet.strips_per_axis(), [&](std::size_t p) {
    return transport_value(paths[p], t);
  });
  return sheet.strip_scale() * sum;
}

GridSpec GridSpec::uniform(const std::vector<int>& points) {
  GridSpec grid;
  for (int m : points) {
    if (m < 1)
      throw ConfigError("grid: every axis needs at least one point");
    std::vector<double> axis(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
      axis[static_cast<std::size_t>(i)] = m == 1 ? 0.0 : static_cast<double>(i) / (m - 1);
    grid.axes.push_back(std::move(axis));
  }
  return grid;
}

std::size_t GridSpec::size() const {
  std::size_t total = axes.empty() ? 0 : 1;
  for (const auto& a : axes)
    total *= a.size();
  return total;
}

void GridSpec::check() const {
  for (const auto& axis : axes) {
    if (axis.empty())
      throw ConfigError("grid: empty axis");
    for (std::size_t i = 0; i < axis.size(); ++i) {
      if (!(axis[i] >= 0.0 && axis[i] <= 1.0))
        throw ConfigError("grid: points must lie in [0, 1]");
      if (i > 0 && axis[i] < axis[i - 1])
        throw ConfigError("grid: axis points must be ascending");
    }
  }
}

Eigen::ArrayXd evaluate_grid(const SheetApproximation& sheet, const GridSpec& grid) {
  grid.check();
  const int d = sheet.params().d;
  if (static_cast<int>(grid.axes.size()) != d)
    throw ConfigError("grid: number of axes must equal d");

  const auto& times = grid.axes.back();
  const auto& paths = sheet.paths();
  const Eigen::Index nt = static_cast<Eigen::Index>(times.size());
  Eigen::MatrixXd strip_values(static_cast<Eigen::Index>(paths.size()), nt);
  for (std::size_t p = 0; p < paths.size(); ++p)
    strip_values.row(static_cast<Eigen::Index>(p)) =
        transport_values_on_grid(paths[p], times).transpose();

  const std::size_t outer_axes = static_cast<std::size_t>(d - 1);
  std::size_t outer_count = 1;
  for (std::size_t i = 0; i < outer_axes; ++i)
    outer_count *= grid.axes[i].size();

  Eigen::ArrayXd values(static_cast<Eigen::Index>(outer_count) * nt);
  std::vector<std::size_t> idx(outer_axes, 0);
  std::vector<AxisWeight> weights(outer_axes);
  for (std::size_t o = 0; o < outer_count; ++o) {
    std::size_t rest = o;
    for (std::size_t i = outer_axes; i > 0; --i) {
      idx[i - 1] = rest % grid.axes[i - 1].size();
      rest /= grid.axes[i - 1].size();
    }
    for (std::size_t i = 0; i < outer_axes; ++i)
      weights[i] = sheet.axis_weight(grid.axes[i][idx[i]]);
    for (Eigen::Index j = 0; j < nt; ++j) {
      const double sum = weighted_strip_sum(weights, sheet.strips_per_axis(), [&](std::size_t p) {
        return strip_values(static_cast<Eigen::Index>(p), j);
      });
      values[static_cast<Eigen::Index>(o) * nt + j] = sheet.strip_scale() * sum;
    }
  }
  return values;
}

} // namespace sheetwalk
