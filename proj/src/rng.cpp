#include "crrl/rng.hpp"

namespace crrl {

std::uint64_t Rng::mix(std::uint64_t z) noexcept {
  // splitmix64 finalizer
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng Rng::derive(std::uint64_t role, std::uint64_t index) const noexcept {
  std::uint64_t k = mix(key_ ^ 0xD1B54A32D192ED03ULL);
  k = mix(k + role * 0x8CB92BA72F3D8DD7ULL);
  k = mix(k + index * 0xAEF17502108EF2D9ULL);
  return Rng(k);
}

double Rng::uniform() noexcept {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

__extension__ typedef unsigned __int128 u128;

std::uint64_t Rng::uniform_index(std::uint64_t n) noexcept {
  // Lemire's multiply-shift with rejection.
  std::uint64_t x = (*this)();
  u128 m = static_cast<u128>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = (*this)();
      m = static_cast<u128>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

Rng make_stream(std::uint64_t seed, StreamRole role, std::uint64_t index) noexcept {
  return Rng(Rng::mix(seed + 0x632BE59BD9B4E019ULL)).derive(static_cast<std::uint64_t>(role), index);
}

}  // namespace crrl
