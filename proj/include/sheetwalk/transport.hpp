#ifndef SHEETWALK_TRANSPORT_HPP
#define SHEETWALK_TRANSPORT_HPP

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sheetwalk/random.hpp"

namespace sheetwalk {

/// Jump times of a Poisson process of the given rate on (0, horizon].
struct PoissonJumpStream {
  double rate = 1.0;
  double horizon = 0.0;
  std::vector<double> jumps; // strictly ascending
};

/// Draws partial sums of iid Exp(rate) gaps until they pass the horizon.
/// The first gap beyond the horizon is drawn and discarded.
PoissonJumpStream sample_jump_stream(double rate, double horizon, Rng& rng);

/// Exact running integral of a +-1 sign process that flips at event times.
///
/// Segment lengths are accumulated with Neumaier compensation; the state is
/// exact up to last_time() apart from that rounding.
class SignedAreaAccumulator {
public:
  /// Integrates the current sign up to `event_time`, then flips the sign.
  void advance_to(double event_time);

  /// Integral up to `time` (>= last_time()) without mutating the state.
  double value_at(double time) const;

  double last_time() const { return last_time_; }
  int sign() const { return sign_; }

private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
  int sign_ = 1;
  double last_time_ = 0.0;
};

enum class JumpStorage { automatic, stored, streaming };

/// Paths above this intensity regenerate their jumps from the seed on demand
/// unless storage is forced.
inline constexpr std::int64_t kStreamingThreshold = 10'000'000;

/// One uniform transport process
///   X_n(t) = n^{-1/2} * sign0 * int_0^{tn} (-1)^{N(u)} du,  t in [0, 1],
/// with N a rate-1 Poisson process on [0, n].
class TransportPath {
public:
  /// Draw order per seed: sign0 (one fair bit), then the jump stream.
  static TransportPath sample(std::int64_t n, Seed seed,
                              JumpStorage storage = JumpStorage::automatic);

  /// Explicit path; stream must be rate 1 with horizon >= n.
  TransportPath(std::int64_t n, int sign0, PoissonJumpStream stream);

  std::int64_t n() const { return n_; }
  int sign0() const { return sign0_; }
  bool streaming() const { return !stream_.has_value(); }

  /// Stored jump stream. Throws std::logic_error for streaming paths.
  const PoissonJumpStream& stream() const;

  /// Same path with the initial sign flipped.
  TransportPath negated() const;

private:
  TransportPath(std::int64_t n, int sign0, Seed seed);

  std::int64_t n_;
  int sign0_;
  Seed seed_ = 0;
  std::optional<PoissonJumpStream> stream_;

  // Writes X_n at each point of an ascending grid into out.
  void evaluate_sorted(std::span<const double> grid, double* out) const;

  friend double transport_value(const TransportPath&, double);
  friend Eigen::VectorXd transport_values_on_grid(const TransportPath&,
                                                  std::span<const double>);
};

/// X_n(t), exact from the jump times.
double transport_value(const TransportPath& path, double t);

/// X_n on an ascending grid in one sweep; bitwise equal to transport_value
/// at each point.
Eigen::VectorXd transport_values_on_grid(const TransportPath& path,
                                         std::span<const double> grid);

/// E[X_n(t)^2] = t - (1 - exp(-2nt)) / (2n).
double transport_variance_exact(std::int64_t n, double t);

} // namespace sheetwalk

#endif
