#ifndef L2R_RNG_HPP_
#define L2R_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace l2r {

// Purpose tags used when deriving substreams from the root seed. Every
// stochastic subsystem draws from its own stream keyed by (seed, tag,
// counters...), so execution order and thread count cannot change what
// any unit of work sees.
namespace stream {
inline constexpr std::uint64_t kInit = 1;       // weight initialization
inline constexpr std::uint64_t kShuffle = 2;    // per-epoch query order
inline constexpr std::uint64_t kQueryDraw = 3;  // per-(epoch, query) Dirichlet
inline constexpr std::uint64_t kSynthetic = 4;  // synthetic data generation
inline constexpr std::uint64_t kTieBreak = 5;   // randomized rank tie-breaks
inline constexpr std::uint64_t kFold = 6;       // per-fold seed derivation
}  // namespace stream

// Deterministic random stream. All draws are produced from explicit
// formulas over the engine's 64-bit output, so two runs of the same
// build (and the parallel and serial paths) agree bit for bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng from_keys(std::initializer_list<std::uint64_t> keys) {
    std::vector<std::uint32_t> words;
    words.reserve(keys.size() * 2);
    for (std::uint64_t k : keys) {
      words.push_back(static_cast<std::uint32_t>(k));
      words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    Rng r;
    r.engine_.seed(seq);
    return r;
  }

  std::uint64_t next() { return engine_(); }

  // uniform on the open interval (0, 1)
  double uniform01() {
    for (;;) {
      const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
      if (u > 0.0) return u;
    }
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // unit-rate exponential; strictly positive
  double exponential() { return -std::log(uniform01()); }

  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

  // uniform integer in [lo, hi], inclusive; rejection keeps it unbiased
  int uniform_int(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    for (;;) {
      const std::uint64_t x = engine_();
      if (x < limit) return lo + static_cast<int>(x % span);
    }
  }

 private:
  Rng() = default;
  std::mt19937_64 engine_;
};

// Fisher-Yates with our own bounded draws; std::shuffle's sequence is
// implementation-defined and would break cross-build reproducibility.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (int i = static_cast<int>(items.size()) - 1; i > 0; --i) {
    const int j = rng.uniform_int(0, i);
    std::swap(items[i], items[j]);
  }
}

// 64-bit FNV-1a; used for config hashes and seed mixing.
inline std::uint64_t fnv1a64(const void* bytes, std::size_t len,
                             std::uint64_t h = 14695981039346656037ull) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace l2r

#endif  // L2R_RNG_HPP_
