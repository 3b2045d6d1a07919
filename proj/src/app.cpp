#include "sheetwalk/app.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <sstream>

#include "sheetwalk/coupling.hpp"
#include "sheetwalk/errors.hpp"
#include "sheetwalk/stats.hpp"
#include "sheetwalk/verify.hpp"

namespace sheetwalk {

namespace {

const char* mode_name(LambdaMode mode) {
  return mode == LambdaMode::theorem ? "theorem" : "exploratory";
}

GridFormat resolve_format(const RunConfig& config, GridFormat fallback) {
  if (config.format == "csv")
    return GridFormat::csv;
  if (config.format == "json")
    return GridFormat::json;
  if (!config.format.empty())
    throw ConfigError("format: expected 'csv' or 'json', got '" + config.format + "'");
  return config.out.empty() ? fallback : format_from_path(config.out);
}

void require_replications(const RunConfig& config, std::size_t minimum) {
  if (config.replications < minimum)
    throw ConfigError("replications: must be at least " + std::to_string(minimum));
}

Json provenance(const RunConfig& config) {
  return {{"version", kArtifactVersion}, {"config", to_json(config)}};
}

void emit(const RunConfig& config, const std::string& text) {
  if (!config.out.empty())
    write_text_file(config.out, text);
}

std::vector<std::int64_t> default_schedule() { return {16, 32, 64, 128, 256}; }

} // namespace

Json to_json(const RunConfig& config) {
  Json grid = Json::array();
  for (int g : config.grid)
    grid.push_back(g);
  return {{"command", config.command},
          {"n", config.n},
          {"lambda", config.lambda},
          {"d", config.d},
          {"seed", config.seed},
          {"replications", config.replications},
          {"grid", grid},
          {"format", config.format},
          {"mode", mode_name(config.mode)},
          {"refinement", config.refinement},
          {"ns", config.ns},
          {"only", config.only}};
}

CommandResult run_simulate(const RunConfig& config) {
  CommandResult result;
  const SheetParams params{config.n, config.lambda, config.d, config.mode};
  result.warnings = validate(params);
  std::vector<int> points = config.grid;
  if (points.empty())
    points.assign(static_cast<std::size_t>(config.d), 101);
  if (points.size() == 1)
    points.assign(static_cast<std::size_t>(config.d), points.front());
  if (static_cast<int>(points.size()) != config.d)
    throw ConfigError("grid: needs one size per dimension (" + std::to_string(config.d) + ")");
  for (int p : points)
    if (p < 1)
      throw ConfigError("grid: sizes must be positive");
  const GridFormat format = resolve_format(config, GridFormat::csv);

  const auto sheet = build_sheet(params, config.seed, config.workers);
  const GridTable table = sheet_table(sheet, GridSpec::uniform(points));
  const Json meta = provenance(config);
  if (format == GridFormat::json) {
    result.output = render_grid(table, format, meta);
  } else {
    result.output = "# " + meta.dump() + "\n" + render_grid(table, format);
  }
  emit(config, result.output);
  return result;
}

CommandResult run_couple(const RunConfig& config) {
  CommandResult result;
  result.warnings = validate(SheetParams{config.n, config.lambda, 2, LambdaMode::theorem});
  if (config.n > 512)
    result.warnings.push_back("n = " + std::to_string(config.n) +
                              " is above the desk-scale cap of 512; expect long runtimes");
  if (config.refinement < 1)
    throw ConfigError("refinement: must be at least 1");

  CouplingOptions options;
  options.workers = config.workers;
  const CoupledRealization real = coupled_realization(config.n, config.lambda, config.seed, options);
  const double sup_error = coupled_sup_error(real, config.refinement);

  const double target = 1.0 / (2.0 * static_cast<double>(config.n * config.n));
  std::vector<double> all_sigma;
  std::size_t embeddings = 0;
  Json per_strip = Json::array();
  for (const auto& strip : real.strips()) {
    const auto& sched = strip.schedule;
    embeddings += sched.count();
    all_sigma.insert(all_sigma.end(), sched.sigma.begin(), sched.sigma.end());
    Json row = Json::object();
    const Estimate sigma = mean_estimate(sched.sigma);
    row["mean_sigma"] = sigma.value;
    row["mean_sigma_se"] = sigma.standard_error;
    row["sigma_sum"] = sched.stop_times.back();
    if (sched.count() >= 10)
      row["ks_gamma_pvalue"] = ks_test(sched.gamma, exp_cdf(2.0 * config.n * config.n)).p_value;
    else
      row["ks_gamma_pvalue"] = nullptr;
    row["bm_horizon"] = strip.bm.horizon;
    per_strip.push_back(row);
  }
  const Estimate sigma = all_sigma.size() >= 2 ? mean_estimate(all_sigma) : Estimate{all_sigma.front(), 0.0};

  Json record = provenance(config);
  record["n"] = config.n;
  record["lambda"] = config.lambda;
  record["seed"] = config.seed;
  record["strips"] = real.strips().size();
  record["embeddings"] = embeddings;
  record["sup_error"] = sup_error;
  record["mean_sigma"] = sigma.value;
  record["mean_sigma_se"] = sigma.standard_error;
  record["mean_sigma_target"] = target;
  record["per_strip"] = per_strip;
  result.output = record.dump(1) + "\n";
  emit(config, result.output);
  return result;
}

CommandResult run_convergence(const RunConfig& config) {
  CommandResult result;
  require_replications(config, 1);
  if (config.refinement < 1)
    throw ConfigError("refinement: must be at least 1");
  const auto ns = config.ns.empty() ? default_schedule() : config.ns;
  const GridFormat format = resolve_format(config, GridFormat::json);
  const ConvergenceStudy study = convergence_study(ns, config.lambda, config.replications,
                                                   config.seed, config.refinement, config.workers);

  if (format == GridFormat::csv) {
    std::string text = "# " + provenance(config).dump() + "\n";
    text += "# slope=" + format_double(study.fit.slope) +
            ",inversions=" + std::to_string(study.inversions) + "\n";
    text += "n,strips,median_sup_error\n";
    for (const auto& row : study.rows)
      text += std::to_string(row.n) + "," + std::to_string(row.strips) + "," +
              format_double(row.median_sup_error) + "\n";
    result.output = text;
  } else {
    Json doc = provenance(config);
    Json rows = Json::array();
    for (const auto& row : study.rows)
      rows.push_back({{"n", row.n},
                      {"strips", row.strips},
                      {"median_sup_error", row.median_sup_error},
                      {"sup_errors", row.sup_errors}});
    doc["lambda"] = study.lambda;
    doc["rows"] = rows;
    doc["fit"] = {{"slope", study.fit.slope},
                  {"intercept", study.fit.intercept},
                  {"r_squared", study.fit.r_squared}};
    doc["inversions"] = study.inversions;
    result.output = doc.dump(1) + "\n";
  }
  emit(config, result.output);
  return result;
}

CommandResult run_verify(const RunConfig& config) {
  CommandResult result;
  VerifyOptions options;
  options.seed = config.seed;
  options.workers = config.workers;
  options.inject_clock_fault = config.inject_fault;
  const auto results = run_verification(options, config.only);
  Json report = provenance(config);
  const Json summary = verification_report(results);
  for (const auto& [key, value] : summary.items())
    report[key] = value;
  result.exit_code = report["all_pass"].get<bool>() ? exit_ok : exit_verification_failed;
  for (const auto& name : report["failed"])
    result.failure += (result.failure.empty() ? "" : ", ") + name.get<std::string>();
  result.output = report.dump(1) + "\n";
  emit(config, result.output);
  return result;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transport-process approximation of the Brownian sheet"};
  app.require_subcommand(1);

  RunConfig config;
  std::string seed_text;
  if (const char* env = std::getenv("SHEETWALK_SEED"))
    seed_text = env;
  std::optional<double> lambda_inv;
  std::string grid_text;
  std::string ns_text;
  std::string mode_text = "theorem";
  bool timing = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed_text, "master seed (default: $SHEETWALK_SEED or 1)");
    sub->add_option("--out", config.out, "output path");
    sub->add_option("--workers", config.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--timing", timing, "report elapsed time on stderr");
  };
  auto lambda_options = [&](CLI::App* sub) {
    auto* direct = sub->add_option("--lambda", config.lambda, "strip density exponent");
    sub->add_option("--lambda-inv", lambda_inv, "1 / lambda")->excludes(direct);
  };

  auto* simulate = app.add_subcommand("simulate", "evaluate W_n on a grid");
  simulate->add_option("--n", config.n, "transport intensity");
  lambda_options(simulate);
  simulate->add_option("--d", config.d, "number of parameters");
  simulate->add_option("--grid", grid_text, "points per axis, e.g. 200x200");
  simulate->add_option("--format", config.format, "csv or json");
  simulate->add_option("--mode", mode_text, "theorem or exploratory");
  common(simulate);

  auto* couple = app.add_subcommand("couple", "couple W_n with a Brownian sheet and report the error");
  couple->add_option("--n", config.n, "transport intensity");
  lambda_options(couple);
  couple->add_option("--r", config.refinement, "time grid refinement factor");
  common(couple);

  auto* convergence = app.add_subcommand("convergence", "median sup error over an n schedule");
  convergence->add_option("--ns", ns_text, "ascending n values, comma separated");
  lambda_options(convergence);
  convergence->add_option("--reps", config.replications, "replications per n");
  convergence->add_option("--r", config.refinement, "time grid refinement factor");
  convergence->add_option("--format", config.format, "json or csv");
  common(convergence);

  auto* verify = app.add_subcommand("verify", "run the acceptance checks");
  verify->add_option("--only", config.only, "criterion names")->delimiter(',');
  verify->add_flag("--inject-fault", config.inject_fault)->group("");
  common(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? exit_ok : exit_config;
  }

  try {
    config.command = app.get_subcommands().front()->get_name();
    if (seed_text.empty()) {
      config.seed = 1;
    } else {
      std::size_t used = 0;
      try {
        config.seed = std::stoull(seed_text, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != seed_text.size() || seed_text.front() == '-')
        throw ConfigError("seed: expected a non-negative integer, got '" + seed_text + "'");
    }
    if (lambda_inv) {
      if (!(*lambda_inv > 0.0) || !std::isfinite(*lambda_inv))
        throw ConfigError("lambda-inv: must be finite and positive");
      config.lambda = 1.0 / *lambda_inv;
    }
    if (mode_text == "exploratory")
      config.mode = LambdaMode::exploratory;
    else if (mode_text != "theorem")
      throw ConfigError("mode: expected 'theorem' or 'exploratory'");
    if (!grid_text.empty()) {
      std::stringstream in(grid_text);
      std::string part;
      while (std::getline(in, part, 'x')) {
        try {
          std::size_t used = 0;
          config.grid.push_back(std::stoi(part, &used));
          if (used != part.size())
            throw std::invalid_argument(part);
        } catch (const std::exception&) {
          throw ConfigError("grid: cannot parse '" + grid_text + "'; expected e.g. 200x200");
        }
      }
    }
    if (!ns_text.empty()) {
      std::stringstream in(ns_text);
      std::string part;
      while (std::getline(in, part, ',')) {
        try {
          std::size_t used = 0;
          config.ns.push_back(std::stoll(part, &used));
          if (used != part.size())
            throw std::invalid_argument(part);
        } catch (const std::exception&) {
          throw ConfigError("ns: cannot parse '" + ns_text + "'; expected e.g. 16,32,64");
        }
      }
    }

    const auto start = std::chrono::steady_clock::now();
    CommandResult result;
    if (config.command == "simulate")
      result = run_simulate(config);
    else if (config.command == "couple")
      result = run_couple(config);
    else if (config.command == "convergence")
      result = run_convergence(config);
    else
      result = run_verify(config);

    for (const auto& w : result.warnings)
      err << "warning: " << w << "\n";
    if (config.out.empty())
      out << result.output;
    if (timing) {
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      err << "elapsed: " << elapsed.count() << " s\n";
    }
    if (result.exit_code == exit_verification_failed)
      err << "verification failed: " << result.failure << "\n";
    return result.exit_code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return exit_io;
  } catch (const HorizonExhausted& e) {
    err << "numeric error: " << e.what() << "\n";
    return exit_numeric;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    err << "numeric error: " << e.what() << "\n";
    return exit_numeric;
  }
}

} // namespace sheetwalk
