#pragma once

#include <cstdint>
#include <string_view>

namespace thermeval {

/// SplitMix64 (Steele, Lea, Flood 2014). Used to expand one 64-bit seed into
/// generator state and as a bit finalizer.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t state) noexcept : state_(state) {}
  std::uint64_t next() noexcept;

 private:
  std::uint64_t state_;
};

/// FNV-1a, 64-bit.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

/// Seed for one (image, view) pair. FNV-1a over the global seed's eight
/// little-endian bytes, the image id, a 0x1F separator and the view id,
/// finalized with one SplitMix64 step.
std::uint64_t view_seed(std::uint64_t global_seed, std::string_view image_id,
                        std::string_view view_id) noexcept;

/// xoshiro256** 1.0 (Blackman, Vigna), state filled by SplitMix64 from the
/// seed. All variates below consume raw outputs in a documented way so that
/// streams are reproducible outside C++; see docs/FORMATS.md.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed) noexcept;

  std::uint64_t next() noexcept;

  /// (next() >> 11) * 2^-53, in [0, 1).
  double uniform() noexcept;
  /// lo + (hi - lo) * uniform().
  double uniform(double lo, double hi) noexcept;
  /// Box-Muller using two uniforms and the cosine branch only.
  double normal(double mean, double sigma) noexcept;
  /// Knuth's product method; draws uniforms until the running product
  /// falls to or below exp(-mean).
  std::uint64_t poisson(double mean) noexcept;

 private:
  std::uint64_t s_[4];
};

}  // namespace thermeval
