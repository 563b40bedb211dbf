#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include "sfree/core.hpp"

namespace sfree::ensembles {

// Philox4x64-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
// Counter-based: block i of stream (k0, k1) is a pure function of (i, k0, k1).
namespace philox_detail {

inline constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
inline constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
inline constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

}  // namespace philox_detail

using PhiloxBlock = std::array<std::uint64_t, 4>;
using PhiloxKey = std::array<std::uint64_t, 2>;

inline PhiloxBlock philox4x64_10(PhiloxBlock ctr, PhiloxKey key) {
  using namespace philox_detail;
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Identifies one random stream: the Philox key is (master, stream_index).
///
/// Sub-streams for the k-th independent object inside a trial are derived with
/// `child(k)`, which keeps the master and replaces the stream index by
/// splitmix64(stream_index ^ splitmix64(k + 1)). Distinct keys give independent
/// Philox streams, so samplers never share state.
struct Seed {
  std::uint64_t master = 0;
  std::uint64_t stream_index = 0;

  [[nodiscard]] Seed child(std::uint64_t k) const {
    return Seed{master, splitmix64(stream_index ^ splitmix64(k + 1))};
  }
  friend bool operator==(const Seed&, const Seed&) = default;
};

/// Sequential view of a Philox stream. Satisfies UniformRandomBitGenerator.
class PhiloxEngine {
 public:
  using result_type = std::uint64_t;

  explicit PhiloxEngine(Seed seed) : key_{seed.master, seed.stream_index} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ == 4) {
      ++counter_;
      block_ = philox4x64_10({counter_, 0, 0, 0}, key_);
      pos_ = 0;
    }
    return block_[pos_++];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }

  /// Standard normal via Box-Muller; the spare deviate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_open0()));
    const double theta = 2.0 * kPi * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Uniform integer in [0, bound), Lemire's nearly-divisionless rejection.
  std::uint64_t below(std::uint64_t bound) {
    require(bound > 0, "PhiloxEngine::below: bound must be positive");
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>((*this)()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform point on the unit circle.
  Complex phase() {
    const double theta = 2.0 * kPi * uniform();
    return {std::cos(theta), std::sin(theta)};
  }

 private:
  PhiloxKey key_;
  std::uint64_t counter_ = 0;
  PhiloxBlock block_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sfree::ensembles
