#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace catopt {

// mt19937_64 with hand-rolled draw methods. The engine's stream is pinned by
// the standard while std::uniform_int_distribution and std::shuffle are not,
// so all randomness goes through this class to keep runs replayable across
// standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // [0, 1) with 53-bit resolution
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // uniform index in [0, n), n > 0
  size_t next_index(size_t n) {
    return static_cast<size_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  // uniform integer in [lo, hi]
  int64_t uniform_int(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(
                    next_index(static_cast<size_t>(hi - lo + 1)));
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[next_index(i)]);
    }
  }

  std::vector<size_t> permutation(size_t n) {
    std::vector<size_t> p(n);
    std::iota(p.begin(), p.end(), size_t{0});
    shuffle(p);
    return p;
  }

  // standard normal via Box-Muller
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace catopt
