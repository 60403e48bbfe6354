#pragma once

// Counter-based random numbers. Every draw is a pure function of a 64-bit key,
// so trees of unbounded depth can be labelled lazily and reproducibly.

#include <cstdint>
#include <limits>
#include <span>

namespace codetree {

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Order-sensitive combination of a key with one more word.
constexpr std::uint64_t hash_combine(std::uint64_t key, std::uint64_t word) noexcept {
  return mix64(key ^ mix64(word ^ 0x6a09e667f3bcc909ULL));
}

template <typename... Words>
constexpr std::uint64_t hash_words(std::uint64_t key, Words... words) noexcept {
  ((key = hash_combine(key, static_cast<std::uint64_t>(words))), ...);
  return key;
}

// Uniform double in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Index i with cumulative[i-1] <= u < cumulative[i]; `cumulative` ends at 1.
std::size_t pick_index(std::span<const double> cumulative, double u) noexcept;

// Uniform index in [0, n) without modulo bias worth caring about at 53 bits.
constexpr std::size_t pick_uniform(std::uint64_t bits, std::size_t n) noexcept {
  return static_cast<std::size_t>(to_unit(bits) * static_cast<double>(n));
}

// A keyed stream: draw i is mix(key, i). Satisfies UniformRandomBitGenerator.
class CounterStream {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterStream(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept { return hash_combine(key_, counter_++); }
  constexpr double uniform() noexcept { return to_unit((*this)()); }
  constexpr std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace codetree
