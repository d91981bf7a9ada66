#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace mfhd {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The 64-bit seed is the key; the 128-bit counter is split into a 64-bit
/// stream id (high half) and a 64-bit block position (low half), so
/// independent streams are addressed directly and output is bit-identical
/// across platforms.
class Philox {
 public:
  using result_type = std::uint64_t;

  Philox(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()();

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Standard normal by inversion.
  double normal();
  /// Uniform integer in [0, bound), bound > 0, by rejection.
  std::uint64_t below(std::uint64_t bound);

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key);

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t position_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;  // remaining 64-bit words in buffer_
};

/// Derives a well-mixed child seed (SplitMix64 finalizer).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

/// Inverse of the standard normal CDF for u in (0, 1): rational
/// approximation refined by one Halley step against std::erfc.
double normal_quantile(double u);

}  // namespace mfhd
