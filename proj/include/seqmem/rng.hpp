#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace seqmem {

/// One step of the splitmix64 sequence (Steele, Lea & Flood, "Fast splittable
/// pseudorandom number generators").  Advances `state` and returns the next
/// output.  This is the only generator used anywhere in the library, so every
/// sampled quantity is reproducible from a 64-bit seed alone.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic seed derivation.  Folds each part into the splitmix64 state
/// in order:  state starts at `root`; for every part p the state is xor-ed
/// with p and stepped once.  The final output is the derived seed.  Used to
/// give independent sub-streams to (network, input, noise) within a trial and
/// to (row, col, trial) cells of a grid, so results do not depend on
/// evaluation order or worker count.
inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t state = root;
  std::uint64_t out = splitmix64(state);
  for (std::uint64_t p : parts) {
    state ^= p;
    out = splitmix64(state);
  }
  return out;
}

/// Minimal deterministic RNG over the splitmix64 stream.  Gaussians come from
/// the Box-Muller transform, so the byte-for-byte output sequence depends only
/// on the seed (no implementation-defined std::normal_distribution).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the second value of each pair is cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Unbiased uniform integer in [0, n) by rejection.
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
    std::uint64_t threshold = -n % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t v = next_u64();
      if (v >= threshold) return v % n;
    }
  }

  /// k distinct indices drawn uniformly from {0, ..., n-1}, returned sorted.
  /// Floyd's algorithm: a single pass of k draws regardless of n.
  std::vector<int> sample_without_replacement(int n, int k) {
    if (k < 0 || n < 0 || k > n)
      throw std::invalid_argument("sample_without_replacement: need 0 <= k <= n");
    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int j = n - k; j < n; ++j) {
      int t = static_cast<int>(uniform_below(static_cast<std::uint64_t>(j) + 1));
      if (taken[static_cast<std::size_t>(t)]) {
        taken[static_cast<std::size_t>(j)] = true;
        out.push_back(j);
      } else {
        taken[static_cast<std::size_t>(t)] = true;
        out.push_back(t);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace seqmem
