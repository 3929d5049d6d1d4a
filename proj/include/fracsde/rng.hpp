#pragma once

#include <cstdint>
#include <random>

namespace fracsde {

using Stream = std::mt19937_64;

/// Derives an independent generator for (master_seed, trajectory, mode).
/// The result depends only on the triple, never on call order or thread.
inline Stream make_stream(std::uint64_t master_seed, std::uint64_t trajectory_index,
                          std::uint64_t mode_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(trajectory_index),
                    static_cast<std::uint32_t>(trajectory_index >> 32),
                    static_cast<std::uint32_t>(mode_index),
                    static_cast<std::uint32_t>(mode_index >> 32)};
  return Stream(seq);
}

/// Seed for one (H, alpha) cell of a study; cells draw from disjoint stream families.
inline std::uint64_t derive_cell_seed(std::uint64_t master_seed, std::uint64_t cell_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(cell_index), 0x63656c6cU};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace fracsde
