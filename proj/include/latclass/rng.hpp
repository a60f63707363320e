#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace latclass {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derive an independent stream seed for one task of a seeded run. Streams are
// a pure function of (base seed, index), so results do not depend on thread
// scheduling.
inline std::uint64_t stream_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(base ^ splitmix64(index + 1));
}

// Seeded generator with platform-independent uniform and flat-Dirichlet
// draws. std::mt19937_64 output is fully specified by the standard; the
// draws below use only raw engine words, never library distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // uniform on [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // uniform on the (n-1)-simplex (flat Dirichlet), strictly positive
  std::vector<double> dirichlet(int n) {
    std::vector<double> v(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      // 1 - uniform() lies in (0, 1], so the log is finite
      v[i] = -std::log(1.0 - uniform());
      sum += v[i];
    }
    for (int i = 0; i < n; ++i) v[i] /= sum;
    return v;
  }

  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace latclass
