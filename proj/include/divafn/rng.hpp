#ifndef DIVAFN_RNG_HPP
#define DIVAFN_RNG_HPP

#include <cmath>
#include <cstdint>
#include <vector>

namespace divafn {

/// Deterministic pseudo-random generator (xoshiro256** seeded via splitmix64).
/// The standard-library distributions are implementation-defined, so every
/// draw used by the pipeline goes through this class to keep runs
/// reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the paired draw is cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Unbiased integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t value = next_u64();
    while (value >= limit) value = next_u64();
    return value % bound;
  }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  /// Derives an independent stream seed from a base seed and tags.
  static std::uint64_t stream(std::uint64_t seed, std::uint64_t tag_a,
                              std::uint64_t tag_b = 0) {
    std::uint64_t x = seed;
    x ^= 0x9e3779b97f4a7c15ull + tag_a;
    x = splitmix64(x);
    x ^= 0xbf58476d1ce4e5b9ull + tag_b;
    return splitmix64(x);
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static std::uint64_t rotl(std::uint64_t value, int amount) {
    return (value << amount) | (value >> (64 - amount));
  }

  std::uint64_t state_[4] = {};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace divafn

#endif  // DIVAFN_RNG_HPP
