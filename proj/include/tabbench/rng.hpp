#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>
#include <vector>

namespace tabbench {

// splitmix64; used to derive independent seed streams from (seed, stream ids).
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// FNV-1a, used to fold strings (task ids, file contents) into seed streams
// and config hashes.
inline uint64_t fnv1a(std::string_view s, uint64_t h = 0xCBF29CE484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

inline uint64_t derive_seed(uint64_t seed, uint64_t a) {
  return splitmix64(splitmix64(seed) ^ splitmix64(a + 0x51ED2701A9B3C64Full));
}
inline uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b) {
  return derive_seed(derive_seed(seed, a), b);
}
inline uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
  return derive_seed(derive_seed(seed, a, b), c);
}

// Deterministic RNG. std::mt19937_64 itself is fully specified by the
// standard; the std:: *distributions* are not, so all distribution math is
// done here by hand to keep byte-identical behavior across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1): 53-bit mantissa.
  double uniform() { return (eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

  // Inclusive integer range via rejection-free Lemire-style reduction with
  // rejection for exactness.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<int64_t>(eng_());  // full 64-bit range
    uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return lo + static_cast<int64_t>(v % span);
  }

  size_t index(size_t n) { return static_cast<size_t>(uniform_int(0, static_cast<int64_t>(n) - 1)); }

  // Box-Muller with a cached spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices from [0, n), order = selection order.
  std::vector<int> sample_without_replacement(int n, int k) {
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    std::vector<int> out;
    out.reserve(k);
    for (int i = 0; i < k && i < n; ++i) {
      size_t j = static_cast<size_t>(i) + index(static_cast<size_t>(n - i));
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tabbench
