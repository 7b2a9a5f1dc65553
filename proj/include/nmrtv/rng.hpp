#pragma once

#include <cstdint>
#include <random>
#include <utility>

namespace nmrtv {

/// SplitMix64 finalizer. Used to derive independent, well-mixed seeds for
/// per-index substreams from a single user seed.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index,
                                       std::uint64_t stream = 0) {
  return mix64(mix64(seed ^ mix64(stream)) + index);
}

/// Engine whose output sequence is fixed by the standard, so draws are
/// reproducible across toolchains.
class Substream {
 public:
  Substream(std::uint64_t seed, std::uint64_t index, std::uint64_t stream = 0)
      : engine_(substream_seed(seed, index, stream)) {}

  /// Uniform in (0, 1], 53-bit resolution.
  double uniform_open0() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(engine_() >> 11) * 0x1.0p-53);
  }

  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(engine_() % span);
  }

  /// Two independent standard normals by Box-Muller.
  std::pair<double, double> normal_pair();

 private:
  std::mt19937_64 engine_;
};

}  // namespace nmrtv
