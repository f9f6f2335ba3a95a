#include "subgauss/random.hpp"

namespace subgauss {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
  return mix64(mix64(mix64(seed) ^ stream) ^ (index * 0xd1b54a32d192ed03ULL));
}

std::uint64_t substream(std::uint64_t stream, std::uint64_t child) noexcept {
  return mix64(stream * 0x9e3779b97f4a7c15ULL + child + 1);
}

}  // namespace subgauss
