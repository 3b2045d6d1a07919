#include "sheetwalk/verify.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sheetwalk/app.hpp"
#include "sheetwalk/coupling.hpp"
#include "sheetwalk/errors.hpp"
#include "sheetwalk/sheet.hpp"
#include "sheetwalk/stats.hpp"
#include "sheetwalk/transport.hpp"

namespace sheetwalk {

namespace {

constexpr double kLevel = 0.01;

Json estimate_json(const Estimate& e, double target) {
  return {{"value", e.value}, {"standard_error", e.standard_error}, {"target", target},
          {"within_3se", e.within(target)}};
}

Json ks_json(const KSResult& r, double level) {
  return {{"statistic", r.statistic}, {"p_value", r.p_value}, {"samples", r.sample_size},
          {"level", level}, {"pass", r.p_value >= level}};
}

// (1/n) int_0^{tn} int_0^{tn} exp(-2|u - v|) dv du by nested quadrature,
// each inner integral split at the kink u = v.
double transport_variance_quadrature(std::int64_t n, double t) {
  const double a = t * static_cast<double>(n);
  auto inner = [a](double u) {
    auto kernel = [u](double v) { return std::exp(-2.0 * std::fabs(u - v)); };
    return integrate_adaptive(kernel, 0.0, u, 1e-13) + integrate_adaptive(kernel, u, a, 1e-13);
  };
  return integrate_adaptive(inner, 0.0, a, 1e-12) / static_cast<double>(n);
}

// Covariance of sheet values at (s1, t1), (s2, t2) implied by the strip model:
// sum_k w_k(s1) w_k(s2) n^{-lambda} times the transport cross-covariance.
double model_covariance(const SheetApproximation& sheet, double s1, double t1, double s2,
                        double t2) {
  auto weights = [&](double s) {
    std::vector<double> w(static_cast<std::size_t>(sheet.strips_per_axis()), 0.0);
    const AxisWeight aw = sheet.axis_weight(s);
    for (std::int64_t k = 0; k < aw.full; ++k)
      w[static_cast<std::size_t>(k)] = 1.0;
    if (aw.full < sheet.strips_per_axis())
      w[static_cast<std::size_t>(aw.full)] = aw.fraction;
    return w;
  };
  const auto w1 = weights(s1);
  const auto w2 = weights(s2);
  double overlap = 0.0;
  for (std::size_t k = 0; k < w1.size(); ++k)
    overlap += w1[k] * w2[k];

  const double n = static_cast<double>(sheet.params().n);
  const double lo = std::min(t1, t2) * n;
  const double hi = std::max(t1, t2) * n;
  const double square = lo + 0.5 * std::expm1(-2.0 * lo);
  const double cross = -std::expm1(-2.0 * lo) * -std::expm1(-2.0 * (hi - lo)) / 4.0;
  return overlap * sheet.strip_scale() * sheet.strip_scale() * (square + cross) / n;
}

struct SheetSample {
  std::vector<double> axis_s{0.25, 0.5, 1.0};
  std::vector<double> axis_t{0.4, 0.8, 1.0};
  std::vector<Eigen::ArrayXd> values; // one 3x3 grid per replication
  std::optional<SheetApproximation> first;

  double at(std::size_t rep, double s, double t) const {
    const auto is = std::find(axis_s.begin(), axis_s.end(), s) - axis_s.begin();
    const auto it = std::find(axis_t.begin(), axis_t.end(), t) - axis_t.begin();
    return values[rep][is * static_cast<Eigen::Index>(axis_t.size()) + it];
  }

  std::vector<double> column(double s, double t) const {
    std::vector<double> out(values.size());
    for (std::size_t r = 0; r < values.size(); ++r)
      out[r] = at(r, s, t);
    return out;
  }
};

class Runner {
public:
  explicit Runner(const VerifyOptions& options) : options_(options) {}

  CriterionResult run(const CriterionInfo& info) {
    CriterionResult result{info.id, info.name, false, Json::object()};
    try {
      dispatch(info.id, result);
    } catch (const std::exception& e) {
      result.pass = false;
      result.detail = {{"error", e.what()}};
    }
    return result;
  }

private:
  void dispatch(int id, CriterionResult& result) {
    switch (id) {
    case 1: transport_variance(result); break;
    case 2: covariance(result); break;
    case 3: normality(result); break;
    case 4: embedding(result); break;
    case 5: clock(result); break;
    case 6: sigma_scaling(result); break;
    case 7: kolmogorov_tails(result); break;
    case 8: convergence(result); break;
    case 9: dparam(result); break;
    case 10: determinism(result); break;
    default: throw std::logic_error("unknown criterion");
    }
  }

  Seed seed_for(const char* role) const { return derive_seed(options_.seed, role, {0}); }

  void transport_variance(CriterionResult& result) {
    constexpr std::size_t reps = 100000;
    const std::vector<double> times{0.25, 1.0};
    const Seed seed = seed_for("transport_variance");
    bool pass = true;
    Json cases = Json::array();
    for (std::int64_t n : {10, 100, 1000}) {
      std::vector<double> at_quarter(reps), at_one(reps);
      parallel_for(reps, options_.workers, [&](std::size_t r) {
        const auto path = TransportPath::sample(
            n, derive_seed(seed, "rep", {static_cast<std::uint64_t>(n), r}));
        const Eigen::VectorXd v = transport_values_on_grid(path, times);
        at_quarter[r] = v[0];
        at_one[r] = v[1];
      });
      for (double t : times) {
        const double exact = transport_variance_exact(n, t);
        const double oracle = transport_variance_quadrature(n, t);
        const bool oracle_ok = std::fabs(oracle - exact) <= 1e-10;
        const Estimate est = variance_estimate(t == 1.0 ? at_one : at_quarter);
        pass = pass && oracle_ok && est.within(exact);
        Json c = estimate_json(est, exact);
        c["n"] = n;
        c["t"] = t;
        c["quadrature"] = oracle;
        c["quadrature_gap"] = std::fabs(oracle - exact);
        cases.push_back(c);
      }
    }
    result.pass = pass;
    result.detail = {{"replications", reps}, {"cases", cases}};
  }

  const SheetSample& sheet_sample() {
    if (sheet_sample_)
      return *sheet_sample_;
    constexpr std::size_t reps = 10000;
    const SheetParams params{10000, 0.19, 2, LambdaMode::theorem};
    const Seed seed = seed_for("sheet_sample");
    SheetSample sample;
    GridSpec grid{{sample.axis_s, sample.axis_t}};
    sample.values.resize(reps);
    parallel_for(reps, options_.workers, [&](std::size_t r) {
      const auto sheet = build_sheet(params, derive_seed(seed, "rep", {r}));
      sample.values[r] = evaluate_grid(sheet, grid);
    });
    sample.first = build_sheet(params, derive_seed(seed, "rep", {0}));
    sheet_sample_ = std::move(sample);
    return *sheet_sample_;
  }

  void covariance(CriterionResult& result) {
    const SheetSample& sample = sheet_sample();
    struct Pair {
      double s1, t1, s2, t2, target;
    };
    const Pair pairs[] = {{1.0, 1.0, 1.0, 1.0, 1.0},
                          {0.5, 1.0, 1.0, 1.0, 0.5},
                          {0.5, 0.4, 0.25, 0.8, 0.1}};
    bool pass = true;
    Json rows = Json::array();
    for (const auto& p : pairs) {
      const auto x = sample.column(p.s1, p.t1);
      const auto y = sample.column(p.s2, p.t2);
      const Estimate est = empirical_covariance(x, y);
      pass = pass && est.within(p.target);
      Json row = estimate_json(est, p.target);
      row["points"] = {{p.s1, p.t1}, {p.s2, p.t2}};
      row["strip_model_covariance"] = model_covariance(*sample.first, p.s1, p.t1, p.s2, p.t2);
      rows.push_back(row);
    }
    result.pass = pass;
    result.detail = {{"n", 10000}, {"lambda", 0.19}, {"replications", sample.values.size()},
                     {"strips", sample.first->strips_per_axis()}, {"pairs", rows}};
  }

  void normality(CriterionResult& result) {
    const SheetSample& sample = sheet_sample();
    const auto x = sample.column(1.0, 1.0);
    const KSResult ks = ks_test(x, normal_cdf(0.0, 1.0));
    const double model_var = model_covariance(*sample.first, 1.0, 1.0, 1.0, 1.0);
    const KSResult ks_model = ks_test(x, normal_cdf(0.0, model_var));
    result.pass = ks.p_value >= kLevel;
    result.detail = {{"n", 10000},
                     {"lambda", 0.19},
                     {"point", {1.0, 1.0}},
                     {"ks_standard_normal", ks_json(ks, kLevel)},
                     {"strip_model_variance", model_var},
                     {"ks_strip_model_normal", ks_json(ks_model, kLevel)}};
  }

  // Enough independent strips at intensity n to supply `wanted` embeddings.
  std::vector<CoupledStrip> pooled_strips(std::int64_t n, std::size_t wanted, const char* role) {
    const std::size_t per_strip = static_cast<std::size_t>(2 * n * n);
    const std::size_t count = (wanted + per_strip - 1) / per_strip;
    const Seed seed = seed_for(role);
    std::vector<std::optional<CoupledStrip>> slots(count);
    parallel_for(count, options_.workers, [&](std::size_t k) {
      slots[k] = build_coupled_strip(n, derive_seed(seed, "bm", {k}), derive_seed(seed, "embed", {k}),
                                     CouplingOptions{});
    });
    std::vector<CoupledStrip> strips;
    for (auto& s : slots)
      strips.push_back(std::move(*s));
    return strips;
  }

  void embedding(CriterionResult& result) {
    constexpr std::int64_t n = 10;
    constexpr std::size_t wanted = 10000;
    const auto strips = pooled_strips(n, wanted, "embedding");
    std::vector<double> exits;
    std::vector<double> taus;
    for (const auto& strip : strips) {
      double previous = 0.0;
      for (std::size_t i = 0; i < strip.schedule.count() && exits.size() < wanted; ++i) {
        exits.push_back(strip.schedule.embedded_values[i] - previous);
        previous = strip.schedule.embedded_values[i];
        taus.push_back(strip.schedule.sigma[i]);
      }
    }
    // Two tests in one criterion: Bonferroni-corrected level.
    const double level = kLevel / 2.0;
    const KSResult ks = ks_test(exits, symmetric_exp_cdf(2.0 * n));
    const Estimate tau = mean_estimate(taus);
    const double target = 1.0 / (2.0 * n * n);
    result.pass = ks.p_value >= level && tau.within(target);
    result.detail = {{"n", n}, {"exit_law", ks_json(ks, level)}, {"mean_tau", estimate_json(tau, target)}};
  }

  void clock(CriterionResult& result) {
    constexpr std::int64_t n = 10;
    constexpr std::size_t wanted = 10000;
    auto strips = pooled_strips(n, wanted, "clock");
    double defect = 0.0;
    std::vector<double> gammas;
    for (std::size_t k = 0; k < strips.size(); ++k) {
      auto& strip = strips[k];
      if (options_.inject_clock_fault && k == 0) {
        strip.schedule.gamma[0] *= 2.0;
        strip.reconstructed = reconstruct_strip(strip.schedule, strip.bm);
      }
      defect = std::max(defect, knot_identity_defect(strip.schedule, strip.reconstructed));
      for (std::size_t i = 0; i < strip.schedule.count() && gammas.size() < wanted; ++i)
        gammas.push_back(strip.schedule.gamma[i]);
    }
    const KSResult ks = ks_test(gammas, exp_cdf(2.0 * n * n));
    result.pass = ks.p_value >= kLevel && defect == 0.0;
    result.detail = {{"n", n},
                     {"clock_law", ks_json(ks, kLevel)},
                     {"knot_identity_defect", defect},
                     {"fault_injected", options_.inject_clock_fault}};
  }

  void sigma_scaling(CriterionResult& result) {
    constexpr std::size_t wanted = 5000;
    std::vector<double> ns;
    std::vector<double> variances;
    Json rows = Json::array();
    for (std::int64_t n : {8, 16, 32, 64}) {
      const auto strips = pooled_strips(n, wanted, ("sigma_scaling_" + std::to_string(n)).c_str());
      std::vector<double> sigmas;
      for (const auto& strip : strips)
        sigmas.insert(sigmas.end(), strip.schedule.sigma.begin(), strip.schedule.sigma.end());
      const Estimate var = variance_estimate(sigmas);
      ns.push_back(static_cast<double>(n));
      variances.push_back(var.value);
      rows.push_back({{"n", n}, {"samples", sigmas.size()}, {"variance", var.value},
                      {"standard_error", var.standard_error},
                      {"n4_times_variance", var.value * std::pow(static_cast<double>(n), 4)}});
    }
    const LogLogFit fit = loglog_slope(ns, variances);
    result.pass = fit.slope >= -4.5 && fit.slope <= -3.5;
    result.detail = {{"rows", rows},
                     {"slope", fit.slope},
                     {"r_squared", fit.r_squared},
                     {"accepted_slope", {-4.5, -3.5}}};
  }

  void kolmogorov_tails(CriterionResult& result) {
    constexpr double eps = 0.05;
    constexpr double lambda = 0.19;
    constexpr std::size_t reps = 500;
    CouplingOptions options;
    options.workers = options_.workers;
    const Seed seed = seed_for("kolmogorov_tails");
    bool pass = true;
    double prev_sigma = 2.0;
    double prev_gamma = 2.0;
    Json rows = Json::array();
    for (std::int64_t n : {8, 16, 32}) {
      const TailEstimate tail = sigma_tail_probability(n, lambda, eps, reps, seed, options);
      const double bound =
          1.0 / (2.0 * eps * eps * std::pow(static_cast<double>(n), 2.0 - lambda));
      const double ps = tail.sigma_probability();
      const double pg = tail.gamma_probability();
      pass = pass && ps <= prev_sigma && pg <= prev_gamma && pg <= bound;
      prev_sigma = ps;
      prev_gamma = pg;
      rows.push_back({{"n", n}, {"sigma_tail", ps}, {"gamma_tail", pg}, {"gamma_bound", bound},
                      {"sigma_degenerate", tail.sigma_degenerate()},
                      {"gamma_degenerate", tail.gamma_degenerate()}});
    }
    result.pass = pass;
    result.detail = {{"eps", eps}, {"lambda", lambda}, {"replications", reps}, {"rows", rows}};
  }

  void convergence(CriterionResult& result) {
    const std::vector<std::int64_t> ns{16, 32, 64, 128, 256};
    const ConvergenceStudy study =
        convergence_study(ns, 0.19, 50, seed_for("convergence"), 4, options_.workers);
    Json rows = Json::array();
    for (const auto& row : study.rows)
      rows.push_back({{"n", row.n}, {"strips", row.strips}, {"median_sup_error", row.median_sup_error}});
    result.pass = study.inversions <= 1 && study.fit.slope < 0.0;
    result.detail = {{"lambda", 0.19},
                     {"replications", 50},
                     {"rows", rows},
                     {"slope", study.fit.slope},
                     {"inversions", study.inversions}};
  }

  void dparam(CriterionResult& result) {
    constexpr std::size_t points = 1000;
    Rng rng(seed_for("dparam"));

    const auto sheet2 = build_sheet(SheetParams{1000, 0.19, 2, LambdaMode::theorem},
                                    seed_for("dparam_d2"), options_.workers);
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < points; ++i) {
      const double x[2] = {rng.uniform_open(), rng.uniform_open()};
      const double a = sheet_value(sheet2, x[0], x[1]);
      const double b = sheet_value_dparam(sheet2, x);
      mismatches += std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b) ? 0 : 1;
    }

    const auto sheet3 = build_sheet(SheetParams{1000, 0.3, 3, LambdaMode::exploratory},
                                    seed_for("dparam_d3"), options_.workers);
    const std::int64_t m = sheet3.strips_per_axis();
    std::size_t face_violations = 0;
    for (std::size_t i = 0; i < points; ++i) {
      double x[3] = {rng.uniform_open(), rng.uniform_open(), rng.uniform_open()};
      x[i % 3] = 0.0;
      face_violations += sheet_value_dparam(sheet3, x) == 0.0 ? 0 : 1;
    }

    // Corner (i, j) / n^lambda at time t: the scaled sum of the transport
    // paths over strips (k1, k2) <= (i, j).
    double worst = 0.0;
    for (std::size_t p = 0; p < points; ++p) {
      const auto i = static_cast<std::int64_t>(rng.next_u64() % static_cast<std::uint64_t>(m + 1));
      const auto j = static_cast<std::int64_t>(rng.next_u64() % static_cast<std::uint64_t>(m + 1));
      const double t = rng.uniform_open();
      double oracle = 0.0;
      for (std::int64_t k1 = 1; k1 <= i; ++k1)
        for (std::int64_t k2 = 1; k2 <= j; ++k2) {
          const std::int64_t index[2] = {k1, k2};
          oracle += transport_value(sheet3.path(index), t);
        }
      oracle *= sheet3.strip_scale();
      const double x[3] = {static_cast<double>(i) / sheet3.density(),
                           static_cast<double>(j) / sheet3.density(), t};
      const double value = sheet_value_dparam(sheet3, x);
      worst = std::max(worst, std::fabs(value - oracle) / std::max(1.0, std::fabs(oracle)));
    }

    result.pass = mismatches == 0 && face_violations == 0 && worst <= 1e-12;
    result.detail = {{"points", points},
                     {"d2_bitwise_mismatches", mismatches},
                     {"d3_strips_per_axis", m},
                     {"d3_null_face_violations", face_violations},
                     {"d3_corner_max_relative_error", worst}};
  }

  void determinism(CriterionResult& result) {
    auto config = [&](const char* command) {
      RunConfig c;
      c.command = command;
      c.seed = seed_for("determinism");
      return c;
    };
    std::vector<std::pair<std::string, RunConfig>> cases;
    {
      auto c = config("simulate");
      c.n = 1000;
      c.grid = {33, 33};
      c.format = "csv";
      cases.emplace_back("simulate_csv", c);
      c.format = "json";
      cases.emplace_back("simulate_json", c);
    }
    {
      auto c = config("couple");
      c.n = 128;
      cases.emplace_back("couple", c);
    }
    {
      auto c = config("convergence");
      c.ns = {8, 16, 32};
      c.replications = 4;
      cases.emplace_back("convergence", c);
    }
    {
      auto c = config("verify");
      c.only = {"dparam"};
      cases.emplace_back("verify", c);
    }

    auto run = [](const RunConfig& c) {
      if (c.command == "simulate")
        return run_simulate(c).output;
      if (c.command == "couple")
        return run_couple(c).output;
      if (c.command == "convergence")
        return run_convergence(c).output;
      return run_verify(c).output;
    };

    bool pass = true;
    Json rows = Json::array();
    for (auto& [label, c] : cases) {
      c.workers = 1;
      const std::string first = run(c);
      const std::string again = run(c);
      c.workers = 4;
      const std::string parallel = run(c);
      const bool same = !first.empty() && first == again && first == parallel;
      pass = pass && same;
      rows.push_back({{"command", label}, {"bytes", first.size()}, {"identical", same}});
    }
    result.pass = pass;
    result.detail = {{"worker_counts", {1, 4}}, {"commands", rows}};
  }

  VerifyOptions options_;
  std::optional<SheetSample> sheet_sample_;
};

} // namespace

const std::vector<CriterionInfo>& criteria() {
  static const std::vector<CriterionInfo> list{
      {1, "transport_variance", "Var X_n(t) matches t + expm1(-2nt)/(2n) within 3 SE", 120.0},
      {2, "covariance", "sheet covariance at three point pairs within 3 SE of the product of minima", 600.0},
      {3, "normality", "W_n(1,1) passes KS against N(0,1)", 0.0},
      {4, "embedding", "exit values follow +-Exp(2n) and E[tau] = 1/(2n^2)", 0.0},
      {5, "clock", "clocks follow Exp(2n^2) and the reconstruction hits every knot", 0.0},
      {6, "sigma_scaling", "log-log slope of Var(sigma) against n near -4", 0.0},
      {7, "kolmogorov_tails", "max-deviation tails shrink with n and respect the clock bound", 0.0},
      {8, "convergence", "median coupled sup error decreases with n", 1800.0},
      {9, "dparam", "d-parameter evaluator agrees with the plane evaluator and nested sums", 0.0},
      {10, "determinism", "CLI artifacts identical across runs and worker counts", 0.0},
  };
  return list;
}

std::vector<CriterionResult> run_verification(const VerifyOptions& options,
                                              const std::vector<std::string>& only,
                                              const CriterionObserver& observer) {
  const auto& all = criteria();
  for (const auto& name : only) {
    const bool known = std::any_of(all.begin(), all.end(),
                                   [&](const CriterionInfo& c) { return name == c.name; });
    if (!known)
      throw ConfigError("only: unknown criterion '" + name + "'");
  }
  Runner runner(options);
  std::vector<CriterionResult> results;
  for (const auto& info : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), info.name) == only.end())
      continue;
    const auto start = std::chrono::steady_clock::now();
    results.push_back(runner.run(info));
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    if (observer)
      observer(results.back(), elapsed.count());
  }
  return results;
}

Json verification_report(const std::vector<CriterionResult>& results) {
  Json report = Json::object();
  Json entries = Json::array();
  std::vector<std::string> failed;
  for (const auto& r : results) {
    entries.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    if (!r.pass)
      failed.push_back(r.name);
  }
  report["criteria"] = entries;
  report["failed"] = failed;
  report["all_pass"] = failed.empty();
  return report;
}

} // namespace sheetwalk
