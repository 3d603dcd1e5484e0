#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace nprf {

// 64-bit FNV-1a. Used for manifests, leakage checks and seed derivation.
inline constexpr uint64_t kFnvOffset = 14695981039346656037ULL;
inline constexpr uint64_t kFnvPrime = 1099511628211ULL;

constexpr uint64_t fnv1a(std::string_view data, uint64_t h = kFnvOffset) {
  for (unsigned char c : data) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

constexpr uint64_t fnv1a_u64(uint64_t x, uint64_t h = kFnvOffset) {
  for (int i = 0; i < 8; i++) {
    h ^= x & 0xffu;
    h *= kFnvPrime;
    x >>= 8;
  }
  return h;
}

// Deterministic RNG. Every draw goes through explicitly coded mappings so a
// stream of draws for a given seed is reproducible across platforms and
// standard library versions (std::uniform_int_distribution et al. are not
// pinned by the standard). Child generators derive from the parent seed and a
// caller-chosen stream id, never from draw order.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), eng_(seed) {}

  uint64_t seed() const { return seed_; }

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, n) by rejection; n must be positive.
  uint64_t below(uint64_t n);

  // Uniform real in [0, 1) with 53 random bits.
  double uniform();

  // Uniform real in [lo, hi).
  double uniform(double lo, double hi);

  // Derived generator for an independent stream.
  Rng derive(uint64_t stream) const {
    return Rng(fnv1a_u64(stream, fnv1a_u64(seed_)));
  }

  // Fisher–Yates, descending index, swap target drawn via below().
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; i--) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t seed_;
  std::mt19937_64 eng_;
};

// Runs fn(i) for i in [0, n). With threads <= 1 runs inline; otherwise splits
// into contiguous chunks. Work must be independent per index and callers must
// combine results in index order so thread count never changes output.
void parallel_for(size_t n, int threads, const std::function<void(size_t)>& fn);

// Formats a double so that parsing the text recovers the exact value.
std::string format_double(double x);

// Strict numeric parsing helpers: whole string must be consumed.
double parse_double(std::string_view s, std::string_view what);
int64_t parse_int(std::string_view s, std::string_view what);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

}  // namespace nprf
