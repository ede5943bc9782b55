#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace noisyopt {

/// Seeded random stream that can be split into independent child streams.
///
/// A child is identified by the parent key and a child id, so the same
/// sequence of split() calls always reproduces the same streams regardless
/// of how many draws the parent has made.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0);

  RngStream split(std::uint64_t child) const;
  RngStream split(std::string_view label) const;

  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal();                       // standard Gaussian
  std::size_t index(std::size_t n);      // uniform in [0, n)

  std::uint64_t key() const noexcept { return key_; }
  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  struct FromKey {};
  RngStream(FromKey, std::uint64_t key);

  std::uint64_t key_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace noisyopt
