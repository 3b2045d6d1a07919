#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sheetwalk/stats.hpp"
#include "sheetwalk/transport.hpp"

using namespace sheetwalk;

namespace {

// (1/n) * double integral of exp(-2|u - v|) over [0, tn]^2.
double variance_by_quadrature(std::int64_t n, double t) {
  const double a = t * static_cast<double>(n);
  auto inner = [a](double u) {
    auto k = [u](double v) { return std::exp(-2.0 * std::fabs(u - v)); };
    return integrate_adaptive(k, 0.0, u, 1e-13) + integrate_adaptive(k, u, a, 1e-13);
  };
  return integrate_adaptive(inner, 0.0, a, 1e-12) / static_cast<double>(n);
}

TransportPath fixed_path(std::int64_t n, int sign0, std::vector<double> jumps) {
  return TransportPath(n, sign0, PoissonJumpStream{1.0, static_cast<double>(n), std::move(jumps)});
}

} // namespace

TEST_CASE("jump stream edge cases and argument checks") {
  Rng rng(1);
  CHECK(sample_jump_stream(1.0, 0.0, rng).jumps.empty());
  CHECK_THROWS_AS(sample_jump_stream(0.0, 1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_jump_stream(-1.0, 1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_jump_stream(std::numeric_limits<double>::quiet_NaN(), 1.0, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(sample_jump_stream(1.0, -0.5, rng), std::invalid_argument);
}

TEST_CASE("jump counts have the Poisson mean") {
  double total = 0.0;
  const int reps = 1000;
  for (int r = 0; r < reps; ++r) {
    Rng rng(derive_seed(2, "count", {static_cast<std::uint64_t>(r)}));
    const auto s = sample_jump_stream(1.0, 1e4, rng);
    total += static_cast<double>(s.jumps.size());
    for (std::size_t i = 1; i < s.jumps.size(); ++i)
      REQUIRE(s.jumps[i] > s.jumps[i - 1]);
    REQUIRE((s.jumps.empty() || s.jumps.back() <= 1e4));
  }
  const double mean = total / reps;
  CHECK(mean >= 1e4 - 3.0 * std::sqrt(10.0));
  CHECK(mean <= 1e4 + 3.0 * std::sqrt(10.0));
}

TEST_CASE("gaps between jumps are Exp(1)") {
  Rng rng(3);
  const auto s = sample_jump_stream(1.0, 101000.0, rng);
  std::vector<double> gaps;
  double previous = 0.0;
  for (double t : s.jumps) {
    gaps.push_back(t - previous);
    previous = t;
  }
  gaps.resize(100000);
  CHECK(ks_test(gaps, exp_cdf(1.0)).p_value >= 0.01);
}

TEST_CASE("accumulator integrates a flipping sign exactly") {
  SignedAreaAccumulator acc;
  CHECK(acc.value_at(0.0) == 0.0);
  acc.advance_to(1.0);
  CHECK(acc.sign() == -1);
  CHECK(acc.value_at(2.5) == 1.0 - 1.5);
  acc.advance_to(3.0);
  CHECK(acc.value_at(4.0) == 0.0);
  CHECK(acc.last_time() == 3.0);
}

TEST_CASE("hand-computed transport values") {
  const auto constant = fixed_path(4, +1, {});
  CHECK(transport_value(constant, 0.0) == 0.0);
  CHECK(transport_value(constant, 1.0) == 2.0);
  CHECK(transport_value(constant, 0.25) == 0.5);

  const auto flipping = fixed_path(4, +1, {1.0, 3.0});
  CHECK(transport_value(flipping, 1.0) == 0.0);
  CHECK(transport_value(flipping, 0.25) == 0.5);
  CHECK(transport_value(flipping, 0.5) == 0.0);
  CHECK(transport_value(flipping, 0.75) == -0.5);
  CHECK(transport_value(flipping.negated(), 0.75) == 0.5);

  CHECK_THROWS_AS(transport_value(flipping, 1.5), std::domain_error);
  CHECK_THROWS_AS(transport_value(flipping, -0.1), std::domain_error);
  CHECK_THROWS_AS(fixed_path(4, 0, {}), std::invalid_argument);
  CHECK_THROWS_AS(TransportPath(4, 1, PoissonJumpStream{1.0, 3.0, {}}), std::invalid_argument);
}

TEST_CASE("grid evaluation matches scalar evaluation bitwise") {
  const auto path = TransportPath::sample(500, 9);
  const std::vector<double> zero{0.0};
  CHECK(transport_values_on_grid(path, zero)[0] == 0.0);

  std::vector<double> grid;
  for (int i = 0; i <= 1000; ++i)
    grid.push_back(i / 1000.0);
  const Eigen::VectorXd values = transport_values_on_grid(path, grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    REQUIRE(values[static_cast<Eigen::Index>(i)] == transport_value(path, grid[i]));

  const std::vector<double> unsorted{0.5, 0.25};
  CHECK_THROWS_AS(transport_values_on_grid(path, unsorted), std::invalid_argument);
}

TEST_CASE("streaming evaluation reproduces the stored path") {
  const auto stored = TransportPath::sample(2000, 21, JumpStorage::stored);
  const auto streaming = TransportPath::sample(2000, 21, JumpStorage::streaming);
  CHECK_FALSE(stored.streaming());
  CHECK(streaming.streaming());
  CHECK(stored.sign0() == streaming.sign0());
  CHECK_THROWS_AS(streaming.stream(), std::logic_error);
  std::vector<double> grid;
  for (int i = 0; i <= 200; ++i)
    grid.push_back(i / 200.0);
  const Eigen::VectorXd a = transport_values_on_grid(stored, grid);
  const Eigen::VectorXd b = transport_values_on_grid(streaming, grid);
  CHECK((a.array() == b.array()).all());
  CHECK(transport_value(stored, 0.37) == transport_value(streaming, 0.37));
}

TEST_CASE("paths are bounded, odd in the sign and piecewise linear with slope sqrt(n)") {
  const std::int64_t n = 300;
  const double root = std::sqrt(static_cast<double>(n));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto path = TransportPath::sample(n, derive_seed(4, "prop", {seed}));
    const auto flipped = path.negated();
    const auto& jumps = path.stream().jumps;
    for (int i = 0; i <= 400; ++i) {
      const double t = i / 400.0;
      const double x = transport_value(path, t);
      REQUIRE(std::fabs(x) <= t * root * (1.0 + 1e-12));
      REQUIRE(transport_value(flipped, t) == -x);
    }
    // Inside the first segment the slope is exactly +-sqrt(n).
    const double end = (jumps.empty() ? static_cast<double>(n) : jumps.front()) / n;
    const double a = 0.25 * end;
    const double b = 0.75 * end;
    const double slope = (transport_value(path, b) - transport_value(path, a)) / (b - a);
    CHECK(std::fabs(slope) == doctest::Approx(root).epsilon(1e-9));
  }
}

TEST_CASE("identical seeds give identical paths") {
  const auto a = TransportPath::sample(1000, 77);
  const auto b = TransportPath::sample(1000, 77);
  CHECK(a.sign0() == b.sign0());
  CHECK(a.stream().jumps == b.stream().jumps);
}

TEST_CASE("closed-form variance") {
  CHECK(transport_variance_exact(10, 0.0) == 0.0);
  CHECK(transport_variance_exact(100, 1.0) == doctest::Approx(0.995).epsilon(1e-15));
  for (std::int64_t n : {1, 10, 100, 1000})
    for (double t : {0.1, 0.25, 1.0})
      CHECK(std::fabs(transport_variance_exact(n, t) - variance_by_quadrature(n, t)) <= 1e-10);
  CHECK_THROWS(transport_variance_exact(0, 0.5));
}

TEST_CASE("sample variance matches the closed form") {
  const std::int64_t n = 50;
  const std::size_t reps = 20000;
  std::vector<double> x(reps);
  for (std::size_t r = 0; r < reps; ++r)
    x[r] = transport_value(TransportPath::sample(n, derive_seed(6, "var", {r})), 0.5);
  CHECK(variance_estimate(x).within(transport_variance_exact(n, 0.5)));
  CHECK(mean_estimate(x).within(0.0));
}
