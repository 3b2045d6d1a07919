#ifndef SHEETWALK_GAUSSIAN_HPP
#define SHEETWALK_GAUSSIAN_HPP

#include <Eigen/Core>

#include <span>
#include <stdexcept>

#include "sheetwalk/grid_io.hpp"
#include "sheetwalk/random.hpp"

namespace sheetwalk {

/// E[W(p) W(q)] for the d-parameter Wiener process: the product of the
/// coordinatewise minima.
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar covariance_exact(const Eigen::MatrixBase<DerivedP>& p,
                                           const Eigen::MatrixBase<DerivedQ>& q) {
  using Scalar = typename DerivedP::Scalar;
  if (p.size() != q.size())
    throw std::invalid_argument("covariance_exact: points differ in dimension");
  if ((p.array() < Scalar(0)).any() || (p.array() > Scalar(1)).any() ||
      (q.array() < Scalar(0)).any() || (q.array() > Scalar(1)).any())
    throw std::domain_error("covariance_exact: points must lie in the unit cube");
  return p.cwiseMin(q).prod();
}

/// Wiener process sampled on the uniform grid {0, 1/m, ..., 1}^d.
struct WienerGrid {
  int d = 2;
  int cells_per_axis = 1;
  Eigen::ArrayXd values; // (m+1)^d entries, row-major

  double step() const { return 1.0 / cells_per_axis; }
  double at(std::span<const int> index) const;
  GridTable table() const;
};

/// Iid N(0, step^d) cell increments summed cumulatively along every axis.
WienerGrid simulate_sheet_grid(int cells_per_axis, int d, Rng& rng);

/// Standard Brownian motion on {0, step, 2 step, ...} covering [0, horizon].
struct BrownianPath {
  double step = 0.0;
  double horizon = 0.0;
  Eigen::VectorXd values;

  /// Time of the last sample (>= horizon).
  double end_time() const { return step * static_cast<double>(values.size() - 1); }

  /// Linear interpolation between samples.
  double value_at(double t) const;
};

BrownianPath simulate_bm_path(double step, double horizon, Rng& rng);

} // namespace sheetwalk

#endif
