#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace som {

// Deterministic 64-bit generator (splitmix64). Standard-library distributions
// are implementation-defined, so everything that must reproduce bit-for-bit
// across platforms goes through this.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n) without modulo bias.
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  // Standard normal via Box-Muller (used only by test-data generators).
  double next_gaussian() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

private:
  std::uint64_t state_;
};

// FNV-1a, the stable string hash used for seed derivation and config hashes.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t mix_u64(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

// Seed for one run of one case: hash(experiment_seed, case_id, trial).
inline std::uint64_t derive_case_seed(std::uint64_t experiment_seed,
                                      const std::string& case_id, int trial) {
  std::uint64_t h = experiment_seed;
  h = mix_u64(h, fnv1a(case_id));
  h = mix_u64(h, static_cast<std::uint64_t>(trial));
  return h;
}

// Per-call stream key: (experiment seed, case id, trial, agent index, round).
// Keeps mock-backend randomness independent of scheduling order.
inline std::uint64_t derive_call_seed(std::uint64_t experiment_seed,
                                      const std::string& case_id, int trial,
                                      int agent_index, int round) {
  std::uint64_t h = derive_case_seed(experiment_seed, case_id, trial);
  h = mix_u64(h, static_cast<std::uint64_t>(agent_index) + 0x51ULL);
  h = mix_u64(h, static_cast<std::uint64_t>(round + 1) + 0xa3ULL);
  return h;
}

// Fisher-Yates with our own generator, for reproducible sampling.
template <typename T>
void deterministic_shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace som
