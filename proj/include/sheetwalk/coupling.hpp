#ifndef SHEETWALK_COUPLING_HPP
#define SHEETWALK_COUPLING_HPP

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "sheetwalk/gaussian.hpp"
#include "sheetwalk/random.hpp"
#include "sheetwalk/sheet.hpp"
#include "sheetwalk/stats.hpp"

namespace sheetwalk {

/// K * eta with K = +-1 fair and eta ~ Exp(2n); mean 0, variance 1/(2n^2).
struct SignedExpIncrement {
  double value = 0.0;
  std::int64_t n = 1;
};

SignedExpIncrement sample_increment(std::int64_t n, Rng& rng);

/// Two-sided barrier (alpha, beta) with alpha < 0 < beta.
class BarrierPair {
public:
  BarrierPair(double alpha, double beta);

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

private:
  double alpha_;
  double beta_;
};

/// Randomized barrier whose Brownian exit value is distributed as +-Exp(2n).
///
/// The pair has density proportional to (beta - alpha) f(-alpha) f(beta) with
/// f the Exp(2n) density, sampled as an equal mixture of
/// (beta ~ Gamma(2, 2n), -alpha ~ Exp(2n)) and its mirror image.
BarrierPair sample_barrier_pair(std::int64_t n, Rng& rng);

/// A stopping time on a path: absolute time and the exact process level there.
struct StopPoint {
  double time = 0.0;
  double level = 0.0;
};

struct EmbedResult {
  double tau = 0.0;        // exit_time - start time
  double exit_value = 0.0; // increment at exit, equal to the barrier hit
  double exit_time = 0.0;
};

/// First exit of bm - start.level from (alpha, beta) after start.time.
///
/// Exits are detected on the sampling grid; a crossing between samples is
/// located by linear interpolation. With bridge_correction, a barrier is also
/// taken as hit inside a step with the Brownian-bridge crossing probability
/// exp(-2 (a - x0)(a - x1) / dt), placed at the step midpoint. Throws
/// HorizonExhausted when the path ends first.
EmbedResult embed_one(const BrownianPath& bm, StopPoint start, const BarrierPair& pair,
                      Rng& rng, bool bridge_correction = true);

/// Starts from the path's own value at start_time.
EmbedResult embed_one(const BrownianPath& bm, double start_time, const BarrierPair& pair,
                      Rng& rng, bool bridge_correction = true);

/// 2n^2 successive embeddings of +-Exp(2n) increments into one Brownian path.
struct EmbeddingSchedule {
  std::int64_t n = 1;
  std::vector<double> sigma;           // stopping intervals
  std::vector<double> stop_times;      // absolute stopping times
  std::vector<double> increments;      // embedded increments, exact barrier levels
  std::vector<double> embedded_values; // path level at each stopping time
  std::vector<double> gamma;           // |increment| / n

  std::size_t count() const { return sigma.size(); }
};

/// Exit detection grid step min(1e-6, 1/(64 n^2)).
double detection_step(std::int64_t n);

/// Throws HorizonExhausted carrying the index of the embedding that failed.
EmbeddingSchedule build_schedule(const BrownianPath& bm, std::int64_t n, Rng& rng,
                                 bool bridge_correction = true);

/// Continuous piecewise-linear path through (knots[i], values[i]); constant
/// after the last knot.
struct PiecewiseLinearPath {
  Eigen::VectorXd knots;
  Eigen::VectorXd values;

  double value_at(double t) const;

  /// Single sweep over an ascending grid.
  Eigen::VectorXd values_on_grid(std::span<const double> times) const;
};

/// Path with value 0 at time 0 and the i-th embedded value at gamma_1 + ... + gamma_i.
PiecewiseLinearPath reconstruct_strip(const EmbeddingSchedule& schedule, const BrownianPath& bm);

/// Clock knots recomputed from the increments alone: sum_{j<=i} |increment_j| / n.
std::vector<double> clock_knots_from_increments(const EmbeddingSchedule& schedule);

/// Largest |path(knot_i) - embedded_value_i| over knots recomputed from the
/// increments; 0 when the reconstruction honours its knot identity.
double knot_identity_defect(const EmbeddingSchedule& schedule, const PiecewiseLinearPath& path);

struct CouplingOptions {
  double horizon = 1.5;
  double horizon_growth = 2.0; // horizon multiplier per retry
  int max_retries = 3;
  bool bridge_correction = true;
  unsigned workers = 1;
};

struct CoupledStrip {
  BrownianPath bm;
  EmbeddingSchedule schedule;
  PiecewiseLinearPath reconstructed;
};

/// Builds one strip: Brownian path seeded bm_seed, embeddings seeded
/// embed_seed. On HorizonExhausted the path is regenerated over a longer
/// horizon, up to max_retries times; the seeds are reused, so the path prefix
/// and every completed embedding are unchanged.
CoupledStrip build_coupled_strip(std::int64_t n, Seed bm_seed, Seed embed_seed,
                                 const CouplingOptions& options);

/// Joint sample of the Brownian sheet W on the strip lines and its transport
/// approximation W_n, both driven by the same strip Brownian motions.
class CoupledRealization {
public:
  CoupledRealization(SheetParams params, Seed seed, std::vector<CoupledStrip> strips);

  const SheetParams& params() const { return params_; }
  Seed seed() const { return seed_; }
  const std::vector<CoupledStrip>& strips() const { return strips_; }

  /// n^{-lambda/2}.
  double scale() const { return scale_; }

  /// W(k / n^lambda, t) for k in [0, strips].
  double sheet_at(std::size_t k, double t) const;

  /// W_n(k / n^lambda, t) for k in [0, strips].
  double approximation_at(std::size_t k, double t) const;

private:
  SheetParams params_;
  Seed seed_;
  double scale_;
  std::vector<CoupledStrip> strips_;
};

/// Strip k uses seeds derive_seed(master, "bm", k) and derive_seed(master, "embed", k).
CoupledRealization coupled_realization(std::int64_t n, double lambda, Seed master_seed,
                                       const CouplingOptions& options = {});

/// max |W_n - W| over the strip lines k / n^lambda and times i / (2 n^2 r).
double coupled_sup_error(const CoupledRealization& realization, int refinement = 4);

struct TailEstimate {
  std::size_t reps = 0;
  std::size_t sigma_hits = 0;
  std::size_t gamma_hits = 0;

  double sigma_probability() const { return static_cast<double>(sigma_hits) / static_cast<double>(reps); }
  double gamma_probability() const { return static_cast<double>(gamma_hits) / static_cast<double>(reps); }

  /// No exceedances observed: the probability is below resolution, not zero.
  bool sigma_degenerate() const { return sigma_hits == 0; }
  bool gamma_degenerate() const { return gamma_hits == 0; }
};

/// Empirical P(max_{i,l} |sigma_1 + ... + sigma_i - i/(2n^2)| >= eps), and the
/// same for the clocks gamma, over `reps` independent coupled realizations.
TailEstimate sigma_tail_probability(std::int64_t n, double lambda, double eps, std::size_t reps,
                                    Seed master_seed, const CouplingOptions& options = {});

struct ConvergenceRow {
  std::int64_t n = 0;
  std::int64_t strips = 0;
  double median_sup_error = 0.0;
  std::vector<double> sup_errors;
};

struct ConvergenceStudy {
  double lambda = 0.0;
  std::vector<ConvergenceRow> rows;
  LogLogFit fit;     // median sup error against n
  int inversions = 0; // steps where the median increases
};

/// Median coupled_sup_error over `reps` realizations for each n; replication
/// r at intensity n is seeded derive_seed(seed, "convergence", {n, r}).
ConvergenceStudy convergence_study(std::span<const std::int64_t> ns, double lambda,
                                   std::size_t reps, Seed seed, int refinement = 4,
                                   unsigned workers = 1);

} // namespace sheetwalk

#endif
