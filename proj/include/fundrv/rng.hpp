#pragma once

#include <array>
#include <cstdint>

namespace fundrv {

/// Philox4x32-10 counter-based generator. The output is a pure function of
/// (counter, key), so independent substreams are just disjoint counters.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

/// Sequential view of one substream: key from the seed, the two upper
/// counter words name the substream, the two lower words count blocks.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint32_t stream_a, std::uint32_t stream_b = 0);

  std::uint32_t next_u32();
  // Uniform integer in [0, bound), bound > 0, by rejection.
  std::uint32_t below(std::uint32_t bound);
  // Uniform on (0, 1) with 53 random bits; never returns 0 or 1.
  double uniform();
  // Standard normal via Box-Muller; pairs are cached.
  double normal();

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint32_t a_;
  std::uint32_t b_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int used_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fundrv
