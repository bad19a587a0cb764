#pragma once

#include <cstdint>
#include <cstdio>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fol {

// Thrown for malformed input files; message carries the line number.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when connectivity or index data is inconsistent with the mesh.
struct TopologyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// splitmix64 finalizer; used to derive independent sub-seeds from (seed, index)
// so parallel and serial sample generation agree bit-for-bit.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic RNG wrapper. Draws doubles from the raw engine output instead
// of std::uniform_real_distribution, whose algorithm is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [lo, hi] inclusive
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  std::uint64_t raw() { return engine_(); }

  // Fisher-Yates shuffle, deterministic under the engine above.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = engine_() % i;
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Static-partition parallel loop. Work item i goes to thread i*T/n, so the
// assignment of items to workers depends only on (n, threads), never on timing.
inline void parallel_for(int n, int threads, const std::function<void(int, int)>& body) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i, 0);
    return;
  }
  int t = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(t);
  for (int w = 0; w < t; ++w) {
    int lo = static_cast<int>(static_cast<std::int64_t>(n) * w / t);
    int hi = static_cast<int>(static_cast<std::int64_t>(n) * (w + 1) / t);
    pool.emplace_back([&, lo, hi, w] {
      for (int i = lo; i < hi; ++i) body(i, w);
    });
  }
  for (auto& th : pool) th.join();
}

inline int default_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

// FNV-1a over a byte string; stable across platforms, used for config hashes.
inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace fol
