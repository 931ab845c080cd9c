#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace ppl {

// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Explicitly passed random source. There is no global generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Independent stream derived from this generator's seed and a stream id.
  // Does not advance this generator.
  Rng split(std::uint64_t stream) const { return Rng(mix_seed(seed_, stream)); }

  double uniform();  // [0, 1)
  double uniform_open();  // (0, 1)
  double normal();
  // Marsaglia-Tsang, with the U^(1/shape) boost for shape < 1.
  double gamma(double shape);
  double beta(double a, double b);
  bool bernoulli(double p);
  std::size_t uniform_index(std::size_t n);
  // Index drawn with probability proportional to `weights`.
  std::size_t categorical(std::span<const double> weights);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace ppl
