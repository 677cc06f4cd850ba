#pragma once

#include <cstdint>

namespace noma {

// Counter-style mixer used to derive independent child seeds. The mix is a
// bijection on 64-bit words, so distinct inputs never collide.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static std::uint64_t mix(std::uint64_t x) {
    SplitMix64 s(x);
    return s.next();
  }

 private:
  std::uint64_t state_;
};

// Uniform double in [0,1) from the top 53 bits of a 64-bit draw. Hand-rolled
// so that a given seed produces the same stream on every platform.
template <class Urbg>
double uniform01(Urbg& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

}  // namespace noma
