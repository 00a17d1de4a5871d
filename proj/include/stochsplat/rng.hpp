#pragma once

#include <cstdint>

namespace stochsplat {

enum class Stream : std::uint32_t { kAccept = 0, kFreeFlight = 1 };

/// Coordinates of one uniform draw. Any draw can be regenerated from its key
/// alone, which is what lets the backward pass replay a forward pass.
struct SampleKey {
  std::uint64_t pass_seed = 0;
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::uint32_t spp_index = 0;
  std::uint32_t gaussian_id = 0;
  Stream stream = Stream::kAccept;
};

/// SplitMix64 finalizer (Stafford "Mix13" constants).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr double to_unit_double(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Hash state after absorbing everything but the primitive id. The renderer
/// builds one per (pixel, sample, stream) and draws per primitive from it.
class PixelSampleStream {
 public:
  constexpr PixelSampleStream(std::uint64_t pass_seed, std::uint32_t x, std::uint32_t y,
                              std::uint32_t spp_index, Stream stream)
      : state_(absorb(pass_seed, x, y, spp_index, stream)) {}

  constexpr double uniform(std::uint32_t gaussian_id) const {
    return to_unit_double(mix64(state_ + 0x9e3779b97f4a7c15ULL * (gaussian_id + 1ULL)));
  }

 private:
  static constexpr std::uint64_t absorb(std::uint64_t seed, std::uint32_t x, std::uint32_t y,
                                        std::uint32_t spp, Stream stream) {
    std::uint64_t h = mix64(seed + 0x632be59bd9b4e019ULL);
    h = mix64(h ^ (static_cast<std::uint64_t>(x) | (static_cast<std::uint64_t>(y) << 32)));
    h = mix64(h ^ (static_cast<std::uint64_t>(spp) |
                   (static_cast<std::uint64_t>(static_cast<std::uint32_t>(stream)) << 32)));
    return h;
  }

  std::uint64_t state_;
};

/// Uniform in [0, 1), a pure function of the key.
constexpr double sample_uniform(const SampleKey& key) {
  return PixelSampleStream(key.pass_seed, key.x, key.y, key.spp_index, key.stream)
      .uniform(key.gaussian_id);
}

/// Seed offset used for the decorrelated loss-gradient pass.
inline constexpr std::uint64_t kDecorrelationSalt = 0xd1b54a32d192ed03ULL;

}  // namespace stochsplat
