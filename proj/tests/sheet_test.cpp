#include <doctest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <vector>

#include "sheetwalk/errors.hpp"
#include "sheetwalk/grid_io.hpp"
#include "sheetwalk/sheet.hpp"

using namespace sheetwalk;

namespace {

std::uint64_t bits(double x) { return std::bit_cast<std::uint64_t>(x); }

} // namespace

TEST_CASE("strip counts") {
  CHECK(strips_per_axis(100000, 1.0 / 5.0001) == 9);
  CHECK(strips_per_axis(10000, 0.19) == 5);
  CHECK(strips_per_axis(100, 0.1) == 1);
  CHECK(strips_per_axis(2, 0.19) == 1);
  CHECK(strips_per_axis(1000, 0.3) == 7);
  // Exact powers must not fall one short.
  CHECK(strips_per_axis(1024, 0.1) == 2);
  CHECK(strips_per_axis(100000, 0.2) == 10);
  CHECK(strips_per_axis(1000000, 0.5) == 1000);

  const SheetParams d3{100, 0.1, 3, LambdaMode::exploratory}; // 0.1 is the open bound for d = 3
  CHECK(build_sheet(d3, 1).paths().size() == 1);
  const SheetParams figure{100000, 1.0 / 5.0001, 2, LambdaMode::theorem};
  CHECK(build_sheet(figure, 1).paths().size() == 9);
}

TEST_CASE("parameter validation names the field") {
  CHECK_THROWS_WITH_AS(validate({0, 0.1, 2, LambdaMode::theorem}), doctest::Contains("n:"), ConfigError);
  CHECK_THROWS_WITH_AS(validate({10, 0.0, 2, LambdaMode::theorem}), doctest::Contains("lambda"), ConfigError);
  CHECK_THROWS_WITH_AS(validate({10, 0.25, 2, LambdaMode::theorem}), doctest::Contains("lambda"), ConfigError);
  CHECK_THROWS_WITH_AS(validate({10, 0.11, 3, LambdaMode::theorem}), doctest::Contains("lambda"), ConfigError);
  CHECK_THROWS_WITH_AS(validate({10, 0.1, 1, LambdaMode::theorem}), doctest::Contains("d:"), ConfigError);
  CHECK_THROWS_AS(validate({10, 1.0, 2, LambdaMode::exploratory}), ConfigError);
  CHECK(validate({10, 0.19, 2, LambdaMode::theorem}).empty());
  CHECK(validate({10, 0.5, 2, LambdaMode::exploratory}).size() == 1);
}

TEST_CASE("the sheet vanishes on the axes") {
  const auto sheet = build_sheet({5000, 0.19, 2, LambdaMode::theorem}, 3);
  for (int i = 0; i <= 20; ++i) {
    const double u = i / 20.0;
    CHECK(sheet_value(sheet, u, 0.0) == 0.0);
    CHECK(sheet_value(sheet, 0.0, u) == 0.0);
  }
}

TEST_CASE("at strip lines the sheet is the scaled sum of strip paths") {
  const auto sheet = build_sheet({10000, 0.19, 2, LambdaMode::theorem}, 4);
  const double scale = std::pow(10000.0, -0.19 / 2.0);
  CHECK(sheet.strip_scale() == doctest::Approx(scale).epsilon(1e-14));
  for (std::int64_t l = 1; l <= sheet.strips_per_axis(); ++l) {
    const double s = static_cast<double>(l) / sheet.density();
    for (double t : {0.1, 0.5, 1.0}) {
      double sum = 0.0;
      for (std::int64_t k = 1; k <= l; ++k) {
        const std::int64_t index[1] = {k};
        sum += transport_value(sheet.path(index), t);
      }
      CHECK(sheet_value(sheet, s, t) == doctest::Approx(scale * sum).epsilon(1e-12));
    }
  }
  // Past the last strip line the value plateaus.
  CHECK(bits(sheet_value(sheet, 1.0, 0.7)) ==
        bits(sheet_value(sheet, 5.0 / sheet.density(), 0.7)));
}

TEST_CASE("the d-parameter evaluator reduces to the plane evaluator bitwise") {
  const auto sheet = build_sheet({3000, 0.19, 2, LambdaMode::theorem}, 5);
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    const double x[2] = {rng.uniform_open(), rng.uniform_open()};
    REQUIRE(bits(sheet_value(sheet, x[0], x[1])) == bits(sheet_value_dparam(sheet, x)));
  }
}

TEST_CASE("three-parameter sheet: null faces and corner sums") {
  const auto sheet = build_sheet({1000, 0.3, 3, LambdaMode::exploratory}, 7);
  REQUIRE(sheet.strips_per_axis() == 7);
  REQUIRE(sheet.paths().size() == 49);
  Rng rng(8);
  for (int i = 0; i < 300; ++i) {
    double x[3] = {rng.uniform_open(), rng.uniform_open(), rng.uniform_open()};
    x[i % 3] = 0.0;
    REQUIRE(sheet_value_dparam(sheet, x) == 0.0);
  }
  for (std::int64_t l1 = 0; l1 <= 7; ++l1)
    for (std::int64_t l2 = 0; l2 <= 7; ++l2) {
      const double t = rng.uniform_open();
      double oracle = 0.0;
      for (std::int64_t k1 = 1; k1 <= l1; ++k1)
        for (std::int64_t k2 = 1; k2 <= l2; ++k2) {
          const std::int64_t index[2] = {k1, k2};
          oracle += transport_value(sheet.path(index), t);
        }
      oracle *= sheet.strip_scale();
      const double x[3] = {l1 / sheet.density(), l2 / sheet.density(), t};
      CHECK(sheet_value_dparam(sheet, x) == doctest::Approx(oracle).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("the sheet is multilinear in the strip coordinates") {
  const auto sheet = build_sheet({1000, 0.3, 3, LambdaMode::exploratory}, 9);
  // Inside one cell the value is bilinear in (s1, s2): check the midpoint rule.
  const double rho = sheet.density();
  const double s1a = 2.2 / rho, s1b = 2.8 / rho, s2a = 4.1 / rho, s2b = 4.9 / rho;
  auto at = [&](double a, double b) {
    const double x[3] = {a, b, 0.6};
    return sheet_value_dparam(sheet, x);
  };
  const double centre = at(0.5 * (s1a + s1b), 0.5 * (s2a + s2b));
  const double average = 0.25 * (at(s1a, s2a) + at(s1a, s2b) + at(s1b, s2a) + at(s1b, s2b));
  CHECK(centre == doctest::Approx(average).epsilon(1e-12));
}

TEST_CASE("grid evaluation agrees with pointwise evaluation") {
  const auto sheet = build_sheet({2000, 0.19, 2, LambdaMode::theorem}, 10);
  const GridSpec grid = GridSpec::uniform({7, 9});
  CHECK(grid.size() == 63);
  const Eigen::ArrayXd values = evaluate_grid(sheet, grid);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 9; ++j) {
      const double x[2] = {grid.axes[0][i], grid.axes[1][j]};
      REQUIRE(bits(values[static_cast<Eigen::Index>(i * 9 + j)]) == bits(sheet_value_dparam(sheet, x)));
    }
  CHECK(GridSpec::uniform({1}).axes[0] == std::vector<double>{0.0});
  CHECK_THROWS_AS(GridSpec::uniform({0}), ConfigError);
}

TEST_CASE("a 1x1 grid at the origin is a single zero") {
  const auto sheet = build_sheet({10, 0.1, 2, LambdaMode::theorem}, 1);
  const auto table = sheet_table(sheet, GridSpec::uniform({1, 1}));
  REQUIRE(table.values.size() == 1);
  CHECK(table.values[0] == 0.0);
  CHECK(render_grid(table, GridFormat::csv) == "axis1,axis2,value\n0,0,0\n");
}

TEST_CASE("CSV and JSON exports round-trip exactly") {
  const auto sheet = build_sheet({4000, 0.19, 2, LambdaMode::theorem}, 11);
  const GridSpec grid = GridSpec::uniform({2, 2});
  const Eigen::ArrayXd expected = evaluate_grid(sheet, grid);
  const auto dir = std::filesystem::temp_directory_path();
  for (const char* name : {"sheetwalk_rt.csv", "sheetwalk_rt.json"}) {
    const auto path = dir / name;
    export_grid(sheet, grid, format_from_path(path), path);
    const GridTable back = read_grid(path);
    REQUIRE(back.values.size() == expected.size());
    CHECK((back.values == expected).all());
    CHECK(back.axes == grid.axes);
    std::filesystem::remove(path);
  }
  const GridSpec fine = GridSpec::uniform({13, 17});
  const GridTable table = sheet_table(sheet, fine);
  const GridTable json_back = parse_grid(render_grid(table, GridFormat::json), GridFormat::json);
  CHECK((json_back.values == table.values).all());
  CHECK(json_back.params["n"] == 4000);
  const GridTable csv_back = parse_grid("# provenance\n" + render_grid(table, GridFormat::csv), GridFormat::csv);
  CHECK((csv_back.values == table.values).all());
}

TEST_CASE("shortest round-trip number formatting") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-0.0) == "-0");
  const double x = 0.1 + 0.2;
  CHECK(std::stod(format_double(x)) == x);
}

TEST_CASE("I/O failures raise IoError with the path") {
  CHECK_THROWS_WITH_AS(read_text_file("/nonexistent/dir/x.csv"), doctest::Contains("/nonexistent/dir/x.csv"), IoError);
  CHECK_THROWS_AS(write_text_file("/nonexistent/dir/x.csv", "a"), IoError);
}
