#pragma once

#include <cstdint>
#include <random>

namespace aecomm {

using Rng = std::mt19937_64;

/// Stream tags keep generators derived from one user seed independent.
enum class Stream : std::uint32_t {
  Init = 1,
  Data = 2,
  Noise = 3,
  Eval = 4,
  Sweep = 5,
};

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t sub = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(sub),
                    static_cast<std::uint32_t>(sub >> 32)};
  return Rng(seq);
}

}  // namespace aecomm
