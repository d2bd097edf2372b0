#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace alignlab {

// SplitMix64 output function applied to x + golden gamma. Used both to seed
// xoshiro state and to derive independent substream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}
  std::uint64_t next() noexcept;

 private:
  std::uint64_t state_;
};

// xoshiro256** seeded from four SplitMix64 outputs. Satisfies
// UniformRandomBitGenerator so it composes with <random> if needed.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept { return next(); }
  std::uint64_t next() noexcept;

  // Uniform on [0,1) from the 53 high bits of one 64-bit output.
  double uniform() noexcept;

  // Uniform integer in [0, n) by rejection (n >= 1).
  std::uint64_t below(std::uint64_t n) noexcept;

 private:
  std::array<std::uint64_t, 4> s_;
};

// Roles distinguish the substreams carved out of one base seed.
enum class StreamRole : std::uint64_t {
  kProbeBank = 1,
  kInstance = 2,
  kTrajectory = 3,
  kEvaluation = 4,
  kDpoCheck = 5,
  kOracle = 6,
};

// role_tag = role << 56 | (major & 0xFFFFFF) << 32 | (minor & 0xFFFFFFFF)
std::uint64_t role_tag(StreamRole role, std::uint64_t major = 0,
                       std::uint64_t minor = 0) noexcept;

// stream_seed = mix64(base_seed XOR role_tag)
std::uint64_t derive_stream_seed(std::uint64_t base_seed, StreamRole role,
                                 std::uint64_t major = 0,
                                 std::uint64_t minor = 0) noexcept;

inline Rng make_stream(std::uint64_t base_seed, StreamRole role,
                       std::uint64_t major = 0, std::uint64_t minor = 0) {
  return Rng(derive_stream_seed(base_seed, role, major, minor));
}

}  // namespace alignlab
