#include "thermeval/rng.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace thermeval {

std::uint64_t SplitMix64::next() noexcept {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) noexcept {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t view_seed(std::uint64_t global_seed, std::string_view image_id,
                        std::string_view view_id) noexcept {
  char le[8];
  for (int i = 0; i < 8; ++i) {
    le[i] = static_cast<char>((global_seed >> (8 * i)) & 0xffU);
  }
  std::uint64_t h = fnv1a64(std::string_view(le, 8));
  h = fnv1a64(image_id, h);
  h = fnv1a64(std::string_view("\x1f", 1), h);
  h = fnv1a64(view_id, h);
  return SplitMix64(h).next();
}

Xoshiro256::Xoshiro256(std::uint64_t seed) noexcept {
  SplitMix64 sm(seed);
  for (auto& word : s_) word = sm.next();
}

std::uint64_t Xoshiro256::next() noexcept {
  const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = std::rotl(s_[3], 45);
  return result;
}

double Xoshiro256::uniform() noexcept {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Xoshiro256::uniform(double lo, double hi) noexcept {
  return lo + (hi - lo) * uniform();
}

double Xoshiro256::normal(double mean, double sigma) noexcept {
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log1p(-u1));
  return mean + sigma * radius * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Xoshiro256::poisson(double mean) noexcept {
  const double limit = std::exp(-mean);
  std::uint64_t k = 0;
  double product = 1.0;
  do {
    ++k;
    product *= uniform();
  } while (product > limit);
  return k - 1;
}

}  // namespace thermeval
