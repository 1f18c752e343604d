#pragma once

#include <cstdint>
#include <initializer_list>

namespace treasure {

// Every random draw in the project is keyed by (master seed, purpose, indices)
// so that independent consumers never share a stream and results do not
// depend on call order or worker count.
enum class Purpose : std::uint64_t {
  MapLayout = 0x6d61702d6c61796full,
  Cost = 0x636f73742d647261ull,
  ProtectionTie = 0x7469652d62726b00ull,
  FirstCell = 0x66697273742d6365ull,
  AgentChoice = 0x6167656e742d6368ull,
  SweepRep = 0x73776565702d7265ull,
  BestResponse = 0x62722d7265702d00ull,
  MapLibrary = 0x6d61702d6c696272ull,
  Session = 0x73657373696f6e00ull,
  Fixture = 0x666978747572652dull,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_key(std::uint64_t seed, Purpose purpose,
                                   std::initializer_list<std::uint64_t> indices = {}) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(purpose)));
  for (std::uint64_t i : indices) h = splitmix64(h ^ splitmix64(i + 0x632be59bd9b4e019ull));
  return h;
}

// SplitMix64 sequence. Bounded draws use rejection so they are exact and
// identical on every platform (std distributions are implementation-defined).
class Stream {
 public:
  explicit constexpr Stream(std::uint64_t key) : state_(key) {}
  Stream(std::uint64_t seed, Purpose purpose, std::initializer_list<std::uint64_t> indices = {})
      : state_(derive_key(seed, purpose, indices)) {}

  constexpr std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform integer in [0, n). n must be positive.
  constexpr std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v = next();
    while (v >= limit) v = next();
    return v % n;
  }

  // Uniform double in [0, 1) with 53 random bits.
  constexpr double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  constexpr bool bernoulli(double p) { return unit() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace treasure
