#pragma once

#include <cstdint>
#include <optional>
#include <random>

namespace resalloc {

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// Seeded random source shared by the simulator, the networks and the agents.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The samplers below are written out explicitly instead of using
/// <random> distributions, whose algorithms are implementation-defined, so a
/// seed produces the same trajectory with any standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Unbiased integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller; the second variate is cached.
  double normal();

  // Poisson(mean). Large means are split into chunks so exp(-mean) never underflows.
  std::uint64_t poisson(double mean);

  // Number of failures before the first success, parameterized by its mean.
  std::uint64_t geometric(double mean);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

}  // namespace resalloc
