#ifndef SHEETWALK_RANDOM_HPP
#define SHEETWALK_RANDOM_HPP

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>

namespace sheetwalk {

using Seed = std::uint64_t;

/// Keyed mix of (master seed, role, multi-index) into a child seed.
///
/// Distinct (role, index) tuples give statistically independent streams, and the
/// result depends only on its arguments, so work split across any number of
/// threads reproduces the same numbers.
Seed derive_seed(Seed master, std::string_view role,
                 std::span<const std::uint64_t> index);

inline Seed derive_seed(Seed master, std::string_view role,
                        std::initializer_list<std::uint64_t> index = {}) {
  return derive_seed(master, role, std::span(index.begin(), index.size()));
}

/// Seeded generator with platform-stable variate transforms.
///
/// The engine is std::mt19937_64 (bit-exact by the standard); the std
/// distributions are not, so exponential and normal variates are produced
/// here by inversion.
class Rng {
public:
  explicit Rng(Seed seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1), 53 bits.
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// +1 or -1 with equal probability (top bit of one draw).
  int fair_sign() { return (engine_() >> 63) != 0 ? -1 : 1; }

  double exponential(double rate);

  /// Standard normal by inverse CDF.
  double normal();

private:
  std::mt19937_64 engine_;
};

/// Inverse of the standard normal CDF for p in (0, 1) (Wichura AS241, ~1e-16).
double normal_quantile(double p);

/// Runs body(i) for i in [0, count) on up to `workers` threads.
/// Iterations must write only to their own slot; results are then
/// independent of the worker count.
void parallel_for(std::size_t count, unsigned workers,
                  const std::function<void(std::size_t)>& body);

} // namespace sheetwalk

#endif
