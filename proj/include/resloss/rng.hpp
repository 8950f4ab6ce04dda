#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace resloss {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123). A pure
/// function of (counter, key), so any draw can be produced independently of
/// every other draw.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key) noexcept;
};

/// Identifier recorded in run manifests and config hashes.
inline constexpr std::string_view kVariateAlgorithm = "philox4x32-10/box-muller-u52";

/// Standard-normal variates for one (seed, order, realization) stream.
///
/// Counter layout: (block, realization, order, 0); key: the two halves of
/// the 64-bit seed. Each block yields two uniforms u1, u2 on the 52-bit
/// midpoint lattice (k + 1/2) / 2^52, strictly inside (0, 1), and the
/// Box-Muller pair sqrt(-2 ln u1) * (cos 2 pi u2, sin 2 pi u2).
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint32_t order, std::uint32_t realization) noexcept;

  double next() noexcept;
  void fill(std::span<double> out) noexcept;

 private:
  Philox4x32::Key key_;
  std::uint32_t order_;
  std::uint32_t realization_;
  std::uint32_t block_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Maps a 64-bit integer to a uniform double in the open interval (0, 1).
double to_unit_open(std::uint64_t bits) noexcept;

}  // namespace resloss
