#pragma once

#include <array>
#include <cstdint>
#include <iterator>
#include <string_view>
#include <utility>

namespace splitknock {

// Seeded generator used by every stochastic routine in the library.
//
// xoshiro256** with its state expanded from the 64-bit seed by splitmix64,
// uniform doubles from the top 53 bits, and standard normals from the basic
// Box-Muller transform (the second variate of each pair is cached). The
// whole recipe is pinned here and versioned through kAlgorithm so that a
// recorded seed replays bit-identically on any platform.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "xoshiro256ss+splitmix64+boxmuller/1";

  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept;

  // Uniform on [0, 1).
  double uniform() noexcept;

  double normal() noexcept;

  // Uniform on {0, ..., bound - 1}; bound must be positive.
  std::uint64_t uniform_index(std::uint64_t bound) noexcept;

  // Fisher-Yates.
  template <class RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    const auto count = static_cast<std::uint64_t>(std::distance(first, last));
    for (std::uint64_t i = count; i > 1; --i) {
      const auto j = uniform_index(i);
      using std::swap;
      swap(first[static_cast<std::ptrdiff_t>(i - 1)], first[static_cast<std::ptrdiff_t>(j)]);
    }
  }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

// Independent child seed for work unit `index` of a run seeded with `base`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept;

}  // namespace splitknock
