#include "alignlab/rng.hpp"

#include <bit>

namespace alignlab {

namespace {
constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t finalize(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

std::uint64_t mix64(std::uint64_t x) noexcept { return finalize(x + kGoldenGamma); }

std::uint64_t SplitMix64::next() noexcept {
  state_ += kGoldenGamma;
  return finalize(state_);
}

Rng::Rng(std::uint64_t seed) noexcept {
  SplitMix64 sm(seed);
  for (auto& word : s_) {
    word = sm.next();
  }
}

std::uint64_t Rng::next() noexcept {
  const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = std::rotl(s_[3], 45);
  return result;
}

double Rng::uniform() noexcept {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) noexcept {
  if (n <= 1) {
    return 0;
  }
  const std::uint64_t limit = max() - max() % n;
  std::uint64_t draw = next();
  while (draw >= limit) {
    draw = next();
  }
  return draw % n;
}

std::uint64_t role_tag(StreamRole role, std::uint64_t major,
                       std::uint64_t minor) noexcept {
  return (static_cast<std::uint64_t>(role) << 56) |
         ((major & 0xFFFFFFULL) << 32) | (minor & 0xFFFFFFFFULL);
}

std::uint64_t derive_stream_seed(std::uint64_t base_seed, StreamRole role,
                                 std::uint64_t major,
                                 std::uint64_t minor) noexcept {
  return mix64(base_seed ^ role_tag(role, major, minor));
}

}  // namespace alignlab
