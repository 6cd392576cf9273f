#pragma once

#include <cstdint>

#include "tlae/matrix.hpp"

namespace tlae {

// Counter-based random stream. The i-th 64-bit word is the SplitMix64
// finaliser applied to key + (i+1) * golden-gamma, where key mixes the seed
// and the stream id. Normal variates use the Box-Muller transform on two
// consecutive uniforms (both outputs consumed, cosine branch first), so a
// given (seed, stream) yields the same sequence on every platform with IEEE
// doubles and a correctly rounded libm; bit-level claims hold per build.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  std::uint64_t next_u64() noexcept;
  // Uniform on the open interval (0, 1).
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal() noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;
// Derives a child seed; used where independent runs need distinct seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept;

Matrix sample_std_normal(RngStream& rng, std::size_t rows, std::size_t cols);

}  // namespace tlae
