#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace lica {

// Deterministic PRNG used everywhere randomness is needed. Streams are
// derived from (base seed, path of stream ids) so that rollout workers,
// environments and evaluation draw from independent sequences regardless
// of scheduling order.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  h = splitmix64(h ^ c);
  return h;
}

// Stream tags keep derived sequences disjoint by purpose.
namespace stream {
constexpr std::uint64_t kInit = 0x01;
constexpr std::uint64_t kRollout = 0x02;
constexpr std::uint64_t kEnv = 0x03;
constexpr std::uint64_t kEval = 0x04;
constexpr std::uint64_t kGumbel = 0x05;
constexpr std::uint64_t kRun = 0x06;
}  // namespace stream

class Rng {
 public:
  Rng() : engine_(0) {}
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1); safe under log().
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double gumbel() {
    return -std::log(-std::log(uniform_open()));
  }

  // Unbiased integer in [0, n).
  int randint(int n) {
    const std::uint64_t nn = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = (UINT64_MAX / nn) * nn;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<int>(x % nn);
  }

  // Sample an index from a probability vector (assumed to sum to ~1).
  int categorical(const std::vector<double>& probs) {
    double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  }

  std::string state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void set_state(const std::string& s) {
    std::istringstream is(s);
    is >> engine_;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lica
