#ifndef SHEETWALK_SHEET_HPP
#define SHEETWALK_SHEET_HPP

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sheetwalk/random.hpp"
#include "sheetwalk/transport.hpp"

namespace sheetwalk {

/// theorem: lambda must lie in (0, 1/(5(d-1))). exploratory: any lambda in
/// (0, 1), reported with a warning.
enum class LambdaMode { theorem, exploratory };

struct SheetParams {
  std::int64_t n = 1;
  double lambda = 0.19;
  int d = 2;
  LambdaMode mode = LambdaMode::theorem;
};

/// Throws ConfigError for invalid parameters; returns warnings otherwise.
std::vector<std::string> validate(const SheetParams& params);

/// n^lambda in extended precision, snapped to an integer when within one ulp.
long double strip_density(std::int64_t n, double lambda);

/// floor(n^lambda) with the snapping of strip_density.
std::int64_t strips_per_axis(std::int64_t n, double lambda);

/// Strip weights along one of the first d-1 axes at coordinate s:
/// strips 1..full carry weight 1, strip full+1 carries `fraction`.
struct AxisWeight {
  std::int64_t full = 0;
  double fraction = 0.0;
};

/// The approximation W_n of the d-parameter Wiener process built from
/// floor(n^lambda)^(d-1) independent transport paths, one per strip.
class SheetApproximation {
public:
  SheetApproximation(SheetParams params, Seed seed, std::vector<TransportPath> paths);

  const SheetParams& params() const { return params_; }
  Seed seed() const { return seed_; }
  std::int64_t strips_per_axis() const { return strips_; }

  /// n^lambda as used for interpolation.
  double density() const { return density_; }

  /// n^{-(d-1) lambda / 2}: maps transport values to strip contributions.
  double strip_scale() const { return strip_scale_; }

  /// Paths in row-major order of their 1-based multi-index (k_1, ..., k_{d-1}).
  const std::vector<TransportPath>& paths() const { return paths_; }
  const TransportPath& path(std::span<const std::int64_t> multi_index) const;

  AxisWeight axis_weight(double s) const;

private:
  SheetParams params_;
  Seed seed_;
  std::int64_t strips_;
  double density_;
  double strip_scale_;
  std::vector<TransportPath> paths_;
};

/// One path per strip, seeded derive_seed(master_seed, "strip", k).
SheetApproximation build_sheet(const SheetParams& params, Seed master_seed,
                               unsigned workers = 1);

/// W_n(s, t) for d = 2.
double sheet_value(const SheetApproximation& sheet, double s, double t);

/// W_n(x) for any d; the last coordinate is time. Multilinear in the first
/// d-1 coordinates between strip corners, constant past the last strip.
double sheet_value_dparam(const SheetApproximation& sheet, std::span<const double> x);

/// Per-axis evaluation points, each ascending in [0, 1].
struct GridSpec {
  std::vector<std::vector<double>> axes;

  /// points[i] equally spaced points on axis i including both ends
  /// (a single point sits at 0).
  static GridSpec uniform(const std::vector<int>& points);

  std::size_t size() const;
  void check() const;
};

/// Sheet values on the grid, row-major (last axis fastest); equal bitwise to
/// sheet_value_dparam at every point.
Eigen::ArrayXd evaluate_grid(const SheetApproximation& sheet, const GridSpec& grid);

} // namespace sheetwalk

#endif
