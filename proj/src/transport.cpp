#include "sheetwalk/transport.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sheetwalk {

namespace {

/// Sequential gap generator shared by stored and streaming paths, so both
/// see the same jump times for a given generator state.
class JumpGenerator {
public:
  JumpGenerator(double rate, double horizon, Rng& rng)
      : rate_(rate), horizon_(horizon), rng_(rng) {}

  std::optional<double> next() {
    if (done_)
      return std::nullopt;
    double t = time_ + rng_.exponential(rate_);
    if (t <= time_) // gap below one ulp of the running time
      t = std::nextafter(time_, std::numeric_limits<double>::infinity());
    if (t > horizon_) {
      done_ = true;
      return std::nullopt;
    }
    time_ = t;
    return t;
  }

private:
  double rate_;
  double horizon_;
  Rng& rng_;
  double time_ = 0.0;
  bool done_ = false;
};

void check_rate_horizon(double rate, double horizon) {
  if (!std::isfinite(rate) || rate <= 0.0)
    throw std::invalid_argument("sample_jump_stream: rate must be finite and positive");
  if (!(horizon >= 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument("sample_jump_stream: horizon must be finite and nonnegative");
}

void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::domain_error("transport_value: t = " + std::to_string(t) +
                            " outside [0, 1]");
}

double scaled(const TransportPath& path, double integral) {
  return path.sign0() * (integral / std::sqrt(static_cast<double>(path.n())));
}

/// Walks the jumps once, emitting the path value at each grid point.
template <typename NextJump, typename Emit>
void sweep(const TransportPath& path, std::span<const double> grid,
           NextJump&& next_jump, Emit&& emit) {
  const double n = static_cast<double>(path.n());
  SignedAreaAccumulator acc;
  std::optional<double> pending = next_jump();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double x = grid[g] * n;
    while (pending && *pending <= x) {
      acc.advance_to(*pending);
      pending = next_jump();
    }
    emit(g, scaled(path, acc.value_at(x)));
  }
}

} // namespace

PoissonJumpStream sample_jump_stream(double rate, double horizon, Rng& rng) {
  check_rate_horizon(rate, horizon);
  PoissonJumpStream stream{rate, horizon, {}};
  stream.jumps.reserve(static_cast<std::size_t>(rate * horizon * 1.01) + 16);
  JumpGenerator gen(rate, horizon, rng);
  while (auto t = gen.next())
    stream.jumps.push_back(*t);
  return stream;
}

void SignedAreaAccumulator::advance_to(double event_time) {
  const double segment = sign_ * (event_time - last_time_);
  const double total = sum_ + segment;
  if (std::fabs(sum_) >= std::fabs(segment))
    compensation_ += (sum_ - total) + segment;
  else
    compensation_ += (segment - total) + sum_;
  sum_ = total;
  sign_ = -sign_;
  last_time_ = event_time;
}

double SignedAreaAccumulator::value_at(double time) const {
  SignedAreaAccumulator copy = *this;
  copy.advance_to(time);
  return copy.sum_ + copy.compensation_;
}

TransportPath TransportPath::sample(std::int64_t n, Seed seed, JumpStorage storage) {
  if (n < 1)
    throw std::invalid_argument("TransportPath: n must be >= 1");
  if (storage == JumpStorage::automatic)
    storage = n > kStreamingThreshold ? JumpStorage::streaming : JumpStorage::stored;
  if (storage == JumpStorage::streaming) {
    Rng rng(seed);
    const int sign0 = rng.fair_sign();
    return TransportPath(n, sign0, seed);
  }
  Rng rng(seed);
  const int sign0 = rng.fair_sign();
  return TransportPath(n, sign0, sample_jump_stream(1.0, static_cast<double>(n), rng));
}

TransportPath::TransportPath(std::int64_t n, int sign0, PoissonJumpStream stream)
    : n_(n), sign0_(sign0), stream_(std::move(stream)) {
  if (n_ < 1)
    throw std::invalid_argument("TransportPath: n must be >= 1");
  if (sign0_ != 1 && sign0_ != -1)
    throw std::invalid_argument("TransportPath: sign0 must be +1 or -1");
  if (stream_->rate != 1.0 || stream_->horizon < static_cast<double>(n_))
    throw std::invalid_argument("TransportPath: stream must have rate 1 and horizon >= n");
}

TransportPath::TransportPath(std::int64_t n, int sign0, Seed seed)
    : n_(n), sign0_(sign0), seed_(seed) {}

const PoissonJumpStream& TransportPath::stream() const {
  if (!stream_)
    throw std::logic_error("TransportPath: jumps are regenerated, not stored");
  return *stream_;
}

TransportPath TransportPath::negated() const {
  TransportPath copy = *this;
  copy.sign0_ = -sign0_;
  return copy;
}

void TransportPath::evaluate_sorted(std::span<const double> grid, double* out) const {
  auto emit = [out](std::size_t g, double v) { out[g] = v; };
  if (stream_) {
    const auto& jumps = stream_->jumps;
    std::size_t i = 0;
    sweep(*this, grid, [&]() -> std::optional<double> {
      if (i < jumps.size())
        return jumps[i++];
      return std::nullopt;
    }, emit);
    return;
  }
  Rng rng(seed_);
  rng.fair_sign();
  JumpGenerator gen(1.0, static_cast<double>(n_), rng);
  sweep(*this, grid, [&] { return gen.next(); }, emit);
}

double transport_value(const TransportPath& path, double t) {
  check_time(t);
  const double grid[1] = {t};
  double out = 0.0;
  path.evaluate_sorted(grid, &out);
  return out;
}

Eigen::VectorXd transport_values_on_grid(const TransportPath& path,
                                         std::span<const double> grid) {
  for (std::size_t g = 0; g < grid.size(); ++g) {
    check_time(grid[g]);
    if (g > 0 && grid[g] < grid[g - 1])
      throw std::invalid_argument("transport_values_on_grid: grid must be ascending");
  }
  Eigen::VectorXd values(static_cast<Eigen::Index>(grid.size()));
  path.evaluate_sorted(grid, values.data());
  return values;
}

double transport_variance_exact(std::int64_t n, double t) {
  if (n < 1)
    throw std::invalid_argument("transport_variance_exact: n must be >= 1");
  check_time(t);
  const double two_n = 2.0 * static_cast<double>(n);
  return t + std::expm1(-two_n * t) / two_n;
}

} // namespace sheetwalk
