#pragma once

#include <cstdint>

namespace klc {

/// splitmix64 stream. Streams are derived by hashing a master seed with
/// integer labels, so any (iteration, state) pair maps to the same stream
/// regardless of scheduling or worker count.
class RngStream {
 public:
  explicit RngStream(std::uint64_t state) : state_(state) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0);
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t mix_u64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based stream derivation from (seed, a, b, c).
inline RngStream derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                               std::uint64_t c = 0) {
  std::uint64_t h = mix_u64(seed ^ 0x6a09e667f3bcc909ULL);
  h = mix_u64(h ^ mix_u64(a ^ 0xbb67ae8584caa73bULL));
  h = mix_u64(h ^ mix_u64(b ^ 0x3c6ef372fe94f82bULL));
  h = mix_u64(h ^ mix_u64(c ^ 0xa54ff53a5f1d36f1ULL));
  return RngStream(h);
}

}  // namespace klc
