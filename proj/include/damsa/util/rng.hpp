#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace damsa::util {

// Seeded PRNG with a fully specified draw sequence. std::shuffle and
// std::uniform_int_distribution are implementation-defined, so shuffles go
// through an explicit Fisher-Yates with rejection-sampled bounded draws to
// keep split construction byte-identical across platforms and compilers.
class DeterministicRng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64/fisher-yates";

  explicit DeterministicRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform draw in [0, bound) by rejection sampling.
  std::uint64_t bounded(std::uint64_t bound) {
    if (bound == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % bound;
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(bounded(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace damsa::util
