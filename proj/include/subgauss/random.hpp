#pragma once

#include <cstdint>
#include <random>

namespace subgauss {

using Engine = std::mt19937_64;

// Counter-based seed derivation. Each (seed, stream, index) triple maps to an
// independent engine seed through SplitMix64 finalisation, so any work unit
// can construct its generator without touching shared state.
std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept;

// Child stream id for hierarchical decomposition (cell -> direction -> resample).
std::uint64_t substream(std::uint64_t stream, std::uint64_t child) noexcept;

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return Engine(derive_seed(seed, stream, index));
}

}  // namespace subgauss
