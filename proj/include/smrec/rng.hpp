#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace smrec {

// Deterministic RNG with hand-rolled distributions. std::mt19937_64 output is
// standardized but the std distributions are not, so every transform lives
// here to keep generated bytes identical across compilers.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Modulo bias is negligible for n << 2^64.
  uint64_t uniform_int(uint64_t n) { return eng_() % n; }

  // Box-Muller with cached spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derives an independent stream; used for per-shard / per-purpose seeding.
  uint64_t derive(uint64_t salt) {
    std::mt19937_64 tmp(eng_() ^ (salt * 0x9e3779b97f4a7c15ull));
    return tmp();
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline std::vector<uint32_t> identity_permutation(size_t n) {
  std::vector<uint32_t> p(n);
  for (size_t i = 0; i < n; ++i) p[i] = static_cast<uint32_t>(i);
  return p;
}

inline std::vector<uint32_t> random_permutation(size_t n, uint64_t seed) {
  auto p = identity_permutation(n);
  Rng rng(seed);
  rng.shuffle(p);
  return p;
}

}  // namespace smrec
