#include <doctest.h>

#include <cmath>
#include <vector>

#include "sheetwalk/gaussian.hpp"
#include "sheetwalk/stats.hpp"

using namespace sheetwalk;

TEST_CASE("exact covariance of the Wiener sheet") {
  const Eigen::Vector2d corner(1.0, 1.0);
  CHECK(covariance_exact(corner, corner) == 1.0);
  CHECK(covariance_exact(Eigen::Vector2d(0.0, 0.7), Eigen::Vector2d(0.3, 0.9)) == 0.0);
  CHECK(covariance_exact(Eigen::Vector2d(0.5, 0.4), Eigen::Vector2d(0.25, 0.8)) ==
        doctest::Approx(0.1));
  CHECK(covariance_exact(Eigen::Vector3d(0.5, 0.5, 0.5), Eigen::Vector3d(1.0, 0.2, 1.0)) ==
        doctest::Approx(0.05));
  CHECK_THROWS(covariance_exact(Eigen::Vector2d(1.5, 0.0), corner));
  const Eigen::VectorXd p2 = Eigen::VectorXd::Constant(2, 0.5);
  const Eigen::VectorXd p3 = Eigen::VectorXd::Constant(3, 0.5);
  CHECK_THROWS(covariance_exact(p2, p3));
}

TEST_CASE("simulated sheet grid: shape, null faces and argument checks") {
  Rng rng(1);
  const WienerGrid g = simulate_sheet_grid(8, 3, rng);
  CHECK(g.values.size() == 9 * 9 * 9);
  const int origin[3] = {0, 0, 0};
  CHECK(g.at(origin) == 0.0);
  for (int i = 0; i <= 8; ++i)
    for (int j = 0; j <= 8; ++j) {
      const int face[3] = {i, 0, j};
      REQUIRE(g.at(face) == 0.0);
    }
  CHECK_THROWS(simulate_sheet_grid(0, 2, rng));
  const int bad[3] = {9, 0, 0};
  CHECK_THROWS(g.at(bad));
  CHECK(g.table().axes.size() == 3);
}

TEST_CASE("simulated sheet grid has the sheet covariance") {
  const std::size_t reps = 10000;
  std::vector<double> corner(reps), a(reps), b(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    Rng rng(derive_seed(2, "grid", {r}));
    const WienerGrid g = simulate_sheet_grid(128, 2, rng);
    const int c[2] = {128, 128}, p[2] = {64, 64}, q[2] = {128, 64};
    corner[r] = g.at(c);
    a[r] = g.at(p);
    b[r] = g.at(q);
  }
  const Estimate var = variance_estimate(corner);
  CHECK(var.value >= 1.0 - 3.0 * std::sqrt(2.0 / 1e4));
  CHECK(var.value <= 1.0 + 3.0 * std::sqrt(2.0 / 1e4));
  CHECK(empirical_covariance(a, b).within(0.25));
}

TEST_CASE("Brownian path sampling") {
  Rng rng(3);
  const BrownianPath path = simulate_bm_path(0.01, 1.0, rng);
  CHECK(path.values.size() == 101);
  CHECK(path.value_at(0.0) == 0.0);
  CHECK(path.end_time() == doctest::Approx(1.0));
  CHECK(path.value_at(0.005) == doctest::Approx(0.5 * path.values[1]));
  CHECK_THROWS(path.value_at(1.5));
  CHECK_THROWS(simulate_bm_path(0.0, 1.0, rng));
  CHECK_THROWS(simulate_bm_path(0.1, 0.01, rng));

  Rng big(4);
  const double step = 1e-5;
  const BrownianPath long_path = simulate_bm_path(step, 1.0, big);
  std::vector<double> increments(100000);
  for (std::size_t i = 0; i < increments.size(); ++i)
    increments[i] = long_path.values[static_cast<Eigen::Index>(i + 1)] -
                    long_path.values[static_cast<Eigen::Index>(i)];
  CHECK(ks_test(increments, normal_cdf(0.0, step)).p_value >= 0.01);

  std::vector<double> ends(4000);
  for (std::size_t r = 0; r < ends.size(); ++r) {
    Rng rr(derive_seed(5, "bm", {r}));
    const BrownianPath p = simulate_bm_path(0.01, 2.0, rr);
    ends[r] = p.value_at(2.0);
  }
  CHECK(variance_estimate(ends).within(2.0));
}
