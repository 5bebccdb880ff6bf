#ifndef PW_COMMON_HPP
#define PW_COMMON_HPP

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace pw {

enum class Err {
  InvalidArg,
  ShapeMismatch,
  InvalidClass,
  UnsupportedLoss,
  UnsupportedFormat,
  CorruptHeader,
  DidNotConverge,
  DegenerateFit,
  OutOfBounds,
  EmptyTestSet,
  NoProposals,
  Io,
};

class Error : public std::runtime_error {
public:
  Error(Err code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Err code() const { return code_; }

private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& what) { throw Error(code, what); }

// Deterministic RNG. All draws are mapped from the raw 64-bit stream here so
// results do not depend on libstdc++ distribution internals.
class Rng {
public:
  explicit Rng(uint64_t seed) : state_(seed_material(seed)) {}

  uint64_t next() {
    // xorshift* keeps the state tiny and the stream identical everywhere.
    uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545F4914F6CDD1DULL;
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  float funiform(float lo, float hi) { return static_cast<float>(uniform(lo, hi)); }

  // uniform integer in [0, n)
  int below(int n) {
    return static_cast<int>((static_cast<unsigned __int128>(next()) * static_cast<unsigned>(n)) >> 64);
  }

  // Fisher-Yates; std::shuffle is implementation-defined, this is not.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      int j = below(i + 1);
      std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
    }
  }

private:
  static uint64_t seed_material(uint64_t seed) {
    // splitmix64 scramble so nearby seeds give unrelated streams.
    uint64_t z = seed + 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z = z ^ (z >> 31);
    return z | 1;
  }

  uint64_t state_;
};

// Runs fn(i) for i in [0, n). Each index writes only its own slot in caller
// storage, so the result is identical for any job count.
inline void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (jobs <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  int workers = std::min(jobs, n);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([t, n, workers, &fn] {
      for (int i = t; i < n; i += workers) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

inline int default_jobs() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace pw

#endif
