#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace linkrec {

// Deterministic RNG used everywhere seeds appear in a contract.
// std::mt19937_64 output is fully specified by the standard; the bounded and
// uniform draws below avoid std::uniform_*_distribution, whose sequences are
// implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next() { return gen_(); }

  // Unbiased integer in [0, n) by rejection.
  uint64_t bounded(uint64_t n) {
    if (n <= 1) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
  }

  // Double in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 gen_;
};

// splitmix64 finalizer; decorrelates per-stream seeds derived from one base.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t base, uint64_t stream) {
  return mix64(base ^ mix64(stream));
}

// First k positions of a partial Fisher-Yates shuffle of {0,...,n-1}:
// a uniform sample of k distinct indices, order-sensitive, deterministic
// for a fixed rng state.
inline std::vector<size_t> sample_indices(size_t n, size_t k, Rng& rng) {
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  for (size_t i = 0; i < k && i < n; ++i) {
    const size_t j = i + static_cast<size_t>(rng.bounded(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k < n ? k : n);
  return idx;
}

// Full Fisher-Yates permutation of {0,...,n-1}.
inline std::vector<size_t> shuffled_indices(size_t n, Rng& rng) {
  return sample_indices(n, n, rng);
}

}  // namespace linkrec
