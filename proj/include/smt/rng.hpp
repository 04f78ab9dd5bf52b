#ifndef SMT_RNG_HPP
#define SMT_RNG_HPP

#include <cstdint>
#include <random>

namespace smt {

// splitmix64 finalizer; used to derive independent stream seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic random source. All floating-point draws are derived from the
// raw mt19937_64 stream by fixed arithmetic, so sequences are identical across
// platforms and standard-library versions (std::uniform_real_distribution is
// implementation-defined and therefore avoided).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  // Uniform integer in [0, n). Modulo bias is negligible for n << 2^64.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace smt

#endif  // SMT_RNG_HPP
