#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cbsir/errors.hpp"

namespace cbsir {

/// Number of quantized colors used by an index. Fixed per index build.
enum class Palette : std::uint16_t { Colors16 = 16, Colors64 = 64 };

constexpr std::size_t color_count(Palette p) noexcept { return static_cast<std::size_t>(p); }

inline Palette palette_from_colors(int colors) {
  switch (colors) {
    case 16: return Palette::Colors16;
    case 64: return Palette::Colors64;
    default: throw InvalidInput("palette size must be 16 or 64, got " + std::to_string(colors));
  }
}

using ColorIndex = std::uint8_t;

/// Largest value a discretized bin can take.
inline constexpr std::uint8_t kMaxBinValue = 9;

/**
 * Border/interior histogram pair of one region, stored after the log
 * discretization so that every bin is an integer in [0, 9].
 *
 * The 2M bins are laid out border bins first, then interior bins; the
 * distance and the on-disk format both depend on this order.
 */
class BicHistogram {
 public:
  BicHistogram() : BicHistogram(Palette::Colors64) {}
  explicit BicHistogram(Palette palette) : palette_(palette), bins_(2 * color_count(palette), 0) {}

  BicHistogram(Palette palette, std::vector<std::uint8_t> bins) : palette_(palette), bins_(std::move(bins)) {
    if (bins_.size() != 2 * color_count(palette_)) {
      throw InvalidInput("BicHistogram needs " + std::to_string(2 * color_count(palette_)) + " bins, got " +
                         std::to_string(bins_.size()));
    }
    if (std::any_of(bins_.begin(), bins_.end(), [](std::uint8_t v) { return v > kMaxBinValue; })) {
      throw InvalidInput("BicHistogram bin outside [0, 9]");
    }
  }

  Palette palette() const noexcept { return palette_; }
  std::size_t colors() const noexcept { return color_count(palette_); }
  std::size_t size() const noexcept { return bins_.size(); }

  std::uint8_t border(ColorIndex c) const { return bins_.at(c); }
  std::uint8_t interior(ColorIndex c) const { return bins_.at(colors() + c); }

  std::span<const std::uint8_t> bins() const noexcept { return bins_; }

  /// Unchecked write; callers keep values within [0, 9].
  void set_bin(std::size_t i, std::uint8_t v) { bins_.at(i) = v; }

  friend bool operator==(const BicHistogram&, const BicHistogram&) = default;

 private:
  Palette palette_;
  std::vector<std::uint8_t> bins_;
};

}  // namespace cbsir
