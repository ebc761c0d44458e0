#pragma once
// Deterministic random number streams.  Every unit of parallel work (path,
// draw, grid point) owns a generator seeded from (master seed, indices) via
// splitmix64, so results are bit-identical for a fixed seed no matter how the
// work is scheduled across threads.

#include <cstdint>
#include <random>

namespace volrank {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent substream id: hash the master seed with up to two indices.
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t h = splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * (a + 1)));
  return splitmix64(h ^ (0xd1b54a32d192ed03ULL * (b + 1)));
}

class NormalRng {
 public:
  explicit NormalRng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

  double normal() { return normal_(eng_); }
  double uniform() { return uni_(eng_); }
  // Inclusive integer range.
  long long uniform_int(long long lo, long long hi) {
    return std::uniform_int_distribution<long long>(lo, hi)(eng_);
  }
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uni_{0.0, 1.0};
};

}  // namespace volrank
