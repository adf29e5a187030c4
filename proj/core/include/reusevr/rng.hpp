#pragma once

#include <cstdint>
#include <string_view>

namespace reusevr {

// Counter-based generator with labeled splits.  Every stream is a pure
// function of (key, counter), so runs with the same master seed are
// bitwise reproducible regardless of call interleaving across streams.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t key) : key_(key) {}

  // Child stream derived from this stream's key and a label.  Splitting
  // does not advance the parent counter.
  SplitRng split(std::uint64_t label) const {
    return SplitRng(mix(key_ ^ 0x5851f42d4c957f2dULL, label));
  }
  SplitRng split(std::string_view label) const { return split(fnv1a(label)); }

  std::uint64_t next_u64() { return mix(key_, ++counter_); }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform in {0, ..., n-1} via fixed-point multiply; n must be positive.
  std::int64_t uniform_int(std::int64_t n) {
    const auto wide = static_cast<unsigned __int128>(next_u64()) *
                      static_cast<unsigned __int128>(n);
    return static_cast<std::int64_t>(wide >> 64);
  }

  std::uint64_t key() const { return key_; }

 private:
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace reusevr
