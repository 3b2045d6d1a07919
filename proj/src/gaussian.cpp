#include "sheetwalk/gaussian.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace sheetwalk {

double WienerGrid::at(std::span<const int> index) const {
  if (static_cast<int>(index.size()) != d)
    throw std::invalid_argument("WienerGrid::at: index rank must be d");
  Eigen::Index flat = 0;
  for (int i : index) {
    if (i < 0 || i > cells_per_axis)
      throw std::out_of_range("WienerGrid::at: index out of range");
    flat = flat * (cells_per_axis + 1) + i;
  }
  return values[flat];
}

GridTable WienerGrid::table() const {
  GridTable t;
  std::vector<double> axis(static_cast<std::size_t>(cells_per_axis + 1));
  for (int i = 0; i <= cells_per_axis; ++i)
    axis[static_cast<std::size_t>(i)] = static_cast<double>(i) / cells_per_axis;
  t.axes.assign(static_cast<std::size_t>(d), axis);
  t.values = values;
  t.params = {{"d", d}, {"cells_per_axis", cells_per_axis}};
  return t;
}

WienerGrid simulate_sheet_grid(int cells_per_axis, int d, Rng& rng) {
  if (cells_per_axis < 1)
    throw std::invalid_argument("simulate_sheet_grid: need at least one cell per axis");
  if (d < 1)
    throw std::invalid_argument("simulate_sheet_grid: d must be positive");

  WienerGrid grid;
  grid.d = d;
  grid.cells_per_axis = cells_per_axis;
  const Eigen::Index side = cells_per_axis + 1;
  Eigen::Index total = 1;
  for (int i = 0; i < d; ++i)
    total *= side;
  grid.values = Eigen::ArrayXd::Zero(total);

  const double cell_sd = std::pow(grid.step(), 0.5 * d);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(d), 0);
  for (Eigen::Index flat = 0; flat < total; ++flat) {
    bool interior = true;
    for (auto i : idx)
      interior = interior && i > 0;
    if (interior)
      grid.values[flat] = cell_sd * rng.normal();
    for (std::size_t i = idx.size(); i > 0; --i) {
      if (++idx[i - 1] < side)
        break;
      idx[i - 1] = 0;
    }
  }

  // Prefix sums along each axis in turn.
  Eigen::Index stride = 1;
  for (int axis = d - 1; axis >= 0; --axis) {
    for (Eigen::Index flat = 0; flat < total; ++flat) {
      if ((flat / stride) % side != 0)
        grid.values[flat] += grid.values[flat - stride];
    }
    stride *= side;
  }
  return grid;
}

double BrownianPath::value_at(double t) const {
  if (!(t >= 0.0) || t > end_time())
    throw std::domain_error("BrownianPath::value_at: time " + std::to_string(t) +
                            " outside the sampled range");
  const double x = t / step;
  const auto last = values.size() - 1;
  auto j = static_cast<Eigen::Index>(std::floor(x));
  if (j >= last)
    return values[last];
  const double frac = x - static_cast<double>(j);
  if (frac == 0.0)
    return values[j];
  return values[j] + frac * (values[j + 1] - values[j]);
}

BrownianPath simulate_bm_path(double step, double horizon, Rng& rng) {
  if (!(step > 0.0) || !std::isfinite(step))
    throw std::invalid_argument("simulate_bm_path: step must be positive");
  if (!(horizon >= step) || !std::isfinite(horizon))
    throw std::invalid_argument("simulate_bm_path: horizon must be at least one step");
  const auto steps = static_cast<Eigen::Index>(std::ceil(horizon / step - 1e-9));
  BrownianPath path;
  path.step = step;
  path.horizon = horizon;
  path.values.resize(steps + 1);
  const double sd = std::sqrt(step);
  double w = 0.0;
  path.values[0] = 0.0;
  for (Eigen::Index j = 1; j <= steps; ++j) {
    w += sd * rng.normal();
    path.values[j] = w;
  }
  return path;
}

} // namespace sheetwalk
