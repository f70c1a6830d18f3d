#pragma once

#include <cstdint>
#include <string_view>

namespace fowa {

// Deterministic splitmix64 generator. Every pseudo-random choice in the
// library flows through this class so that a seed fully determines all
// outputs across platforms (no std::uniform_* — their mappings are
// implementation-defined).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform-ish value in [0, n). Plain modulo: the slight bias is irrelevant
  // for test-data generation and keeps the mapping trivially reproducible.
  std::uint64_t below(std::uint64_t n) { return n <= 1 ? 0 : next() % n; }

  int below_int(int n) { return static_cast<int>(below(static_cast<std::uint64_t>(n))); }

  // True with probability num/den.
  bool chance(std::uint64_t num, std::uint64_t den) { return below(den) < num; }

  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Independent stream derived from this seed and a label.
  Rng fork(std::string_view label) const {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ state_;
    for (char c : label) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    return Rng(h);
  }

  Rng fork(std::uint64_t stream) const {
    Rng r(state_ ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    r.next();
    return r;
  }

private:
  std::uint64_t state_;
};

// FNV-1a over a string; used for deterministic symbol naming.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace fowa
