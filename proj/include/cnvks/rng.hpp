#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "cnvks/math.hpp"

namespace cnvks::rng {

// Stateless SplitMix64 finalizer, used for key derivation.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Derives a child key from a parent key and an index. Chaining derive()
/// calls gives statistically independent stream keys for nested task
/// hierarchies (study -> cell -> replicate -> permutation).
inline std::uint64_t derive(std::uint64_t key, std::uint64_t index) {
  return mix64(key ^ (0x9e3779b97f4a7c15ull + index * 0xd1342543de82ef95ull));
}

inline std::uint64_t derive(std::uint64_t key, std::uint64_t a, std::uint64_t b) {
  return derive(derive(key, a), b);
}

/// Deterministic xoshiro256++ stream. Streams are opened by key, never by
/// global state, so any (seed, path) pair yields the same sequence no matter
/// which thread runs it or in what order streams are consumed.
class Stream {
 public:
  explicit Stream(std::uint64_t key) {
    std::uint64_t sm = key;
    for (auto& word : state_) {
      sm += 0x9e3779b97f4a7c15ull;
      std::uint64_t z = sm;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      word = z ^ (z >> 31);
    }
  }

  Stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
      : Stream([&] {
          std::uint64_t key = mix64(seed);
          for (std::uint64_t component : path) key = derive(key, component);
          return key;
        }()) {}

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1); safe input for quantile transforms.
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via inverse-CDF sampling; deterministic across platforms
  /// given the quantile implementation.
  double normal() { return math::normal_quantile(uniform_open()); }

  double exponential() { return -std::log(uniform_open()); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Unbiased integer in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  /// Uniform random permutation of 0..n-1 (Fisher-Yates).
  std::vector<std::uint32_t> permutation(std::size_t n) {
    std::vector<std::uint32_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint32_t>(i);
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(idx[i - 1], idx[j]);
    }
    return idx;
  }

  /// k distinct values from 0..n-1, returned sorted ascending.
  std::vector<std::uint32_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
};

inline std::vector<std::uint32_t> Stream::sample_without_replacement(std::size_t n,
                                                                     std::size_t k) {
  // Partial Fisher-Yates over the full index array; fine for the pool sizes
  // seen here (residual matrices have at most ~1e5 columns).
  std::vector<std::uint32_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint32_t>(i);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace cnvks::rng
