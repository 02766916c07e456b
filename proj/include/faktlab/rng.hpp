#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace faktlab {

/// 64-bit FNV-1a; used to derive stream ids from stable string keys.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Counter-based generator: the n-th draw is a pure function of (key, n).
///
/// Child streams are derived with split(); a child depends only on the parent
/// key and the stream id, never on how many values the parent has produced,
/// so per-item streams are independent of iteration order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : key_(mix(seed ^ 0x6a09e667f3bcc909ull)) {}

  Rng split(std::uint64_t stream) const noexcept {
    Rng child(0);
    child.key_ = mix(key_ ^ mix(stream + 0x9e3779b97f4a7c15ull));
    return child;
  }
  Rng split(std::string_view tag) const noexcept { return split(fnv1a(tag)); }

  std::uint64_t key() const noexcept { return key_; }

  std::uint64_t next_u64() noexcept {
    return mix(key_ + 0x9e3779b97f4a7c15ull * ++counter_);
  }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n) noexcept {
    // Lemire's multiply-shift; bias is below 2^-40 for the sizes used here.
    const unsigned __int128 m =
        static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n);
    return static_cast<std::size_t>(m >> 64);
  }

  double normal() noexcept;

  /// Index drawn from an unnormalized nonnegative weight vector.
  std::size_t categorical(std::span<const double> weights) noexcept;

  template <class T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace faktlab
