#include "sheetwalk/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "sheetwalk/errors.hpp"

namespace sheetwalk {

namespace {

// Bridge crossing probabilities below exp(-40) are treated as zero.
constexpr double kBridgeExponentCutoff = 40.0;

void check_n(std::int64_t n, const char* who) {
  if (n < 1)
    throw std::invalid_argument(std::string(who) + ": n must be >= 1");
}

} // namespace

SignedExpIncrement sample_increment(std::int64_t n, Rng& rng) {
  check_n(n, "sample_increment");
  const int sign = rng.fair_sign();
  return {sign * rng.exponential(2.0 * static_cast<double>(n)), n};
}

BarrierPair::BarrierPair(double alpha, double beta) : alpha_(alpha), beta_(beta) {
  if (!(alpha < 0.0 && beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta))
    throw std::invalid_argument("BarrierPair: need alpha < 0 < beta");
}

BarrierPair sample_barrier_pair(std::int64_t n, Rng& rng) {
  check_n(n, "sample_barrier_pair");
  const double rate = 2.0 * static_cast<double>(n);
  const bool size_biased_above = rng.fair_sign() > 0;
  const double biased = rng.exponential(rate) + rng.exponential(rate);
  const double plain = rng.exponential(rate);
  return size_biased_above ? BarrierPair(-plain, biased) : BarrierPair(-biased, plain);
}

EmbedResult embed_one(const BrownianPath& bm, StopPoint start, const BarrierPair& pair, Rng& rng,
                      bool bridge_correction) {
  const double dt = bm.step;
  const auto& v = bm.values;
  const Eigen::Index last = v.size() - 1;
  auto j = static_cast<Eigen::Index>(std::floor(start.time / dt)) + 1;
  while (j <= last && static_cast<double>(j) * dt <= start.time)
    ++j;

  const double a = pair.alpha();
  const double b = pair.beta();
  double prev_time = start.time;
  double prev_x = 0.0;
  for (; j <= last; ++j) {
    const double time = static_cast<double>(j) * dt;
    const double x = v[j] - start.level;
    const double h = time - prev_time;
    if (x >= b) {
      const double exit_time = prev_time + h * (b - prev_x) / (x - prev_x);
      return {exit_time - start.time, b, exit_time};
    }
    if (x <= a) {
      const double exit_time = prev_time + h * (a - prev_x) / (x - prev_x);
      return {exit_time - start.time, a, exit_time};
    }
    if (bridge_correction) {
      const double mid = prev_time + 0.5 * h;
      const double above = 2.0 * (b - prev_x) * (b - x) / h;
      if (above < kBridgeExponentCutoff && rng.uniform_open() < std::exp(-above))
        return {mid - start.time, b, mid};
      const double below = 2.0 * (prev_x - a) * (x - a) / h;
      if (below < kBridgeExponentCutoff && rng.uniform_open() < std::exp(-below))
        return {mid - start.time, a, mid};
    }
    prev_time = time;
    prev_x = x;
  }
  throw HorizonExhausted("embed_one: Brownian path ended at t = " +
                             std::to_string(bm.end_time()) + " before the barrier exit",
                         0);
}

EmbedResult embed_one(const BrownianPath& bm, double start_time, const BarrierPair& pair,
                      Rng& rng, bool bridge_correction) {
  return embed_one(bm, StopPoint{start_time, bm.value_at(start_time)}, pair, rng,
                   bridge_correction);
}

double detection_step(std::int64_t n) {
  check_n(n, "detection_step");
  const double nn = static_cast<double>(n);
  return std::min(1e-6, 1.0 / (64.0 * nn * nn));
}

EmbeddingSchedule build_schedule(const BrownianPath& bm, std::int64_t n, Rng& rng,
                                 bool bridge_correction) {
  check_n(n, "build_schedule");
  const auto count = static_cast<std::size_t>(2 * n * n);
  const double nn = static_cast<double>(n);
  EmbeddingSchedule s;
  s.n = n;
  s.sigma.reserve(count);
  s.stop_times.reserve(count);
  s.increments.reserve(count);
  s.embedded_values.reserve(count);
  s.gamma.reserve(count);

  StopPoint at;
  for (std::size_t i = 0; i < count; ++i) {
    const BarrierPair pair = sample_barrier_pair(n, rng);
    EmbedResult r;
    try {
      r = embed_one(bm, at, pair, rng, bridge_correction);
    } catch (const HorizonExhausted& e) {
      throw HorizonExhausted("build_schedule: embedding " + std::to_string(i + 1) + " of " +
                                 std::to_string(count) + " ran past the path horizon " +
                                 std::to_string(bm.end_time()),
                             i);
    }
    at.time = r.exit_time;
    at.level += r.exit_value;
    s.sigma.push_back(r.tau);
    s.stop_times.push_back(r.exit_time);
    s.increments.push_back(r.exit_value);
    s.embedded_values.push_back(at.level);
    s.gamma.push_back(std::fabs(r.exit_value) / nn);
  }
  return s;
}

double PiecewiseLinearPath::value_at(double t) const {
  if (!(t >= 0.0))
    throw std::domain_error("PiecewiseLinearPath::value_at: negative time");
  const double* begin = knots.data();
  const double* end = begin + knots.size();
  const double* it = std::upper_bound(begin, end, t);
  if (it == end)
    return values[knots.size() - 1];
  const auto hi = static_cast<Eigen::Index>(it - begin);
  const Eigen::Index lo = hi - 1;
  if (knots[lo] == t)
    return values[lo];
  const double w = (t - knots[lo]) / (knots[hi] - knots[lo]);
  return values[lo] + w * (values[hi] - values[lo]);
}

Eigen::VectorXd PiecewiseLinearPath::values_on_grid(std::span<const double> times) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(times.size()));
  const Eigen::Index last = knots.size() - 1;
  Eigen::Index lo = 0;
  for (std::size_t g = 0; g < times.size(); ++g) {
    const double t = times[g];
    if (g > 0 && t < times[g - 1])
      throw std::invalid_argument("PiecewiseLinearPath::values_on_grid: times must ascend");
    while (lo < last && knots[lo + 1] <= t)
      ++lo;
    double v;
    if (lo == last || knots[lo] == t) {
      v = values[lo];
    } else {
      const double w = (t - knots[lo]) / (knots[lo + 1] - knots[lo]);
      v = values[lo] + w * (values[lo + 1] - values[lo]);
    }
    out[static_cast<Eigen::Index>(g)] = v;
  }
  return out;
}

PiecewiseLinearPath reconstruct_strip(const EmbeddingSchedule& schedule, const BrownianPath& bm) {
  const std::size_t count = schedule.count();
  if (schedule.gamma.size() != count || schedule.embedded_values.size() != count)
    throw std::invalid_argument("reconstruct_strip: inconsistent schedule");
  if (count > 0 && schedule.stop_times.back() > bm.end_time())
    throw std::invalid_argument("reconstruct_strip: schedule runs past the Brownian path");

  PiecewiseLinearPath path;
  path.knots.resize(static_cast<Eigen::Index>(count + 1));
  path.values.resize(static_cast<Eigen::Index>(count + 1));
  path.knots[0] = 0.0;
  path.values[0] = 0.0;
  double clock = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    if (!(schedule.gamma[i] > 0.0))
      throw std::invalid_argument("reconstruct_strip: clocks must be positive");
    clock += schedule.gamma[i];
    path.knots[static_cast<Eigen::Index>(i + 1)] = clock;
    path.values[static_cast<Eigen::Index>(i + 1)] = schedule.embedded_values[i];
  }
  return path;
}

std::vector<double> clock_knots_from_increments(const EmbeddingSchedule& schedule) {
  std::vector<double> knots;
  knots.reserve(schedule.increments.size());
  const double nn = static_cast<double>(schedule.n);
  double clock = 0.0;
  for (double inc : schedule.increments) {
    clock += std::fabs(inc) / nn;
    knots.push_back(clock);
  }
  return knots;
}

double knot_identity_defect(const EmbeddingSchedule& schedule, const PiecewiseLinearPath& path) {
  const auto knots = clock_knots_from_increments(schedule);
  double worst = std::fabs(path.value_at(0.0));
  for (std::size_t i = 0; i < knots.size(); ++i)
    worst = std::max(worst, std::fabs(path.value_at(knots[i]) - schedule.embedded_values[i]));
  return worst;
}

CoupledStrip build_coupled_strip(std::int64_t n, Seed bm_seed, Seed embed_seed,
                                 const CouplingOptions& options) {
  const double step = detection_step(n);
  auto attempt = [&](double horizon) {
    Rng bm_rng(bm_seed);
    Rng embed_rng(embed_seed);
    CoupledStrip strip;
    strip.bm = simulate_bm_path(step, horizon, bm_rng);
    strip.schedule = build_schedule(strip.bm, n, embed_rng, options.bridge_correction);
    strip.reconstructed = reconstruct_strip(strip.schedule, strip.bm);
    return strip;
  };
  if (!(options.horizon > 0.0) || !(options.horizon_growth > 1.0) || options.max_retries < 0)
    throw std::invalid_argument("build_coupled_strip: bad horizon policy");
  double horizon = options.horizon;
  for (int retry = 0;; ++retry, horizon *= options.horizon_growth) {
    try {
      return attempt(horizon);
    } catch (const HorizonExhausted&) {
      if (retry == options.max_retries)
        throw;
    }
  }
}

CoupledRealization::CoupledRealization(SheetParams params, Seed seed,
                                       std::vector<CoupledStrip> strips)
    : params_(params), seed_(seed), strips_(std::move(strips)) {
  scale_ = std::pow(static_cast<double>(params_.n), -params_.lambda / 2.0);
}

double CoupledRealization::sheet_at(std::size_t k, double t) const {
  if (k > strips_.size())
    throw std::out_of_range("CoupledRealization::sheet_at: strip index");
  double sum = 0.0;
  for (std::size_t l = 0; l < k; ++l)
    sum += strips_[l].bm.value_at(t);
  return scale_ * sum;
}

double CoupledRealization::approximation_at(std::size_t k, double t) const {
  if (k > strips_.size())
    throw std::out_of_range("CoupledRealization::approximation_at: strip index");
  double sum = 0.0;
  for (std::size_t l = 0; l < k; ++l)
    sum += strips_[l].reconstructed.value_at(t);
  return scale_ * sum;
}

CoupledRealization coupled_realization(std::int64_t n, double lambda, Seed master_seed,
                                       const CouplingOptions& options) {
  const SheetParams params{n, lambda, 2, LambdaMode::theorem};
  validate(params);
  const auto m = static_cast<std::size_t>(strips_per_axis(n, lambda));
  std::vector<std::optional<CoupledStrip>> slots(m);
  parallel_for(m, options.workers, [&](std::size_t k) {
    const std::uint64_t index = k + 1;
    slots[k] = build_coupled_strip(n, derive_seed(master_seed, "bm", {index}),
                                   derive_seed(master_seed, "embed", {index}), options);
  });
  std::vector<CoupledStrip> strips;
  strips.reserve(m);
  for (auto& s : slots)
    strips.push_back(std::move(*s));
  return CoupledRealization(params, master_seed, std::move(strips));
}

double coupled_sup_error(const CoupledRealization& realization, int refinement) {
  if (refinement < 1)
    throw std::invalid_argument("coupled_sup_error: refinement must be >= 1");
  const std::int64_t n = realization.params().n;
  const auto cells = static_cast<std::size_t>(2 * n * n * refinement);
  std::vector<double> times(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i)
    times[i] = static_cast<double>(i) / static_cast<double>(cells);

  const auto& strips = realization.strips();
  Eigen::MatrixXd gap(static_cast<Eigen::Index>(strips.size()),
                      static_cast<Eigen::Index>(times.size()));
  for (std::size_t l = 0; l < strips.size(); ++l) {
    const Eigen::VectorXd approx = strips[l].reconstructed.values_on_grid(times);
    for (std::size_t i = 0; i < times.size(); ++i)
      gap(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(i)) =
          approx[static_cast<Eigen::Index>(i)] - strips[l].bm.value_at(times[i]);
  }
  for (Eigen::Index l = 1; l < gap.rows(); ++l)
    gap.row(l) += gap.row(l - 1);
  return gap.size() == 0 ? 0.0 : realization.scale() * gap.cwiseAbs().maxCoeff();
}

TailEstimate sigma_tail_probability(std::int64_t n, double lambda, double eps, std::size_t reps,
                                    Seed master_seed, const CouplingOptions& options) {
  validate(SheetParams{n, lambda, 2, LambdaMode::theorem});
  if (reps < 100)
    throw std::invalid_argument("sigma_tail_probability: needs at least 100 replications");
  if (!(eps >= 0.0))
    throw std::invalid_argument("sigma_tail_probability: eps must be nonnegative");
  const auto m = static_cast<std::size_t>(strips_per_axis(n, lambda));
  const double unit = 1.0 / (2.0 * static_cast<double>(n) * static_cast<double>(n));

  std::vector<char> sigma_hit(reps, 0);
  std::vector<char> gamma_hit(reps, 0);
  CouplingOptions serial = options;
  serial.workers = 1;
  parallel_for(reps, options.workers, [&](std::size_t rep) {
    const Seed rep_seed = derive_seed(master_seed, "tail", {static_cast<std::uint64_t>(n), rep});
    double sigma_dev = 0.0;
    double gamma_dev = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const std::uint64_t index = k + 1;
      const CoupledStrip strip = build_coupled_strip(n, derive_seed(rep_seed, "bm", {index}),
                                                     derive_seed(rep_seed, "embed", {index}), serial);
      double sigma_sum = 0.0;
      double gamma_sum = 0.0;
      for (std::size_t i = 0; i < strip.schedule.count(); ++i) {
        sigma_sum += strip.schedule.sigma[i];
        gamma_sum += strip.schedule.gamma[i];
        const double target = static_cast<double>(i + 1) * unit;
        sigma_dev = std::max(sigma_dev, std::fabs(sigma_sum - target));
        gamma_dev = std::max(gamma_dev, std::fabs(gamma_sum - target));
      }
    }
    sigma_hit[rep] = sigma_dev >= eps ? 1 : 0;
    gamma_hit[rep] = gamma_dev >= eps ? 1 : 0;
  });

  TailEstimate estimate;
  estimate.reps = reps;
  for (std::size_t r = 0; r < reps; ++r) {
    estimate.sigma_hits += static_cast<std::size_t>(sigma_hit[r]);
    estimate.gamma_hits += static_cast<std::size_t>(gamma_hit[r]);
  }
  return estimate;
}

ConvergenceStudy convergence_study(std::span<const std::int64_t> ns, double lambda,
                                   std::size_t reps, Seed seed, int refinement,
                                   unsigned workers) {
  if (ns.size() < 3)
    throw ConfigError("n schedule: needs at least 3 values");
  for (std::size_t i = 1; i < ns.size(); ++i)
    if (ns[i] <= ns[i - 1])
      throw ConfigError("n schedule: values must be strictly ascending");
  if (reps < 1)
    throw ConfigError("replications: must be positive");
  for (auto n : ns)
    validate(SheetParams{n, lambda, 2, LambdaMode::theorem});

  ConvergenceStudy study;
  study.lambda = lambda;
  CouplingOptions options;
  for (auto n : ns) {
    ConvergenceRow row;
    row.n = n;
    row.strips = strips_per_axis(n, lambda);
    row.sup_errors.assign(reps, 0.0);
    parallel_for(reps, workers, [&](std::size_t r) {
      const Seed rep_seed =
          derive_seed(seed, "convergence", {static_cast<std::uint64_t>(n), r});
      row.sup_errors[r] = coupled_sup_error(coupled_realization(n, lambda, rep_seed, options),
                                            refinement);
    });
    row.median_sup_error = median(row.sup_errors);
    study.rows.push_back(std::move(row));
  }

  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < study.rows.size(); ++i) {
    xs.push_back(static_cast<double>(study.rows[i].n));
    ys.push_back(study.rows[i].median_sup_error);
    if (i > 0 && study.rows[i].median_sup_error > study.rows[i - 1].median_sup_error)
      ++study.inversions;
  }
  study.fit = loglog_slope(xs, ys);
  return study;
}

} // namespace sheetwalk
