#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <string>

#include "cbsir/bic_histogram.hpp"
#include "cbsir/errors.hpp"

namespace cbsir {

/**
 * Log discretization of a normalized bin value in [0, 255]:
 * f(0) = 0, f(1) = 1, f(x) = ceil(log2 x) + 1 otherwise. The result is
 * always in [0, 9].
 */
constexpr std::uint8_t f_transform_unchecked(unsigned x) noexcept {
  if (x == 0) return 0;
  if (x == 1) return 1;
  // ceil(log2 x) == bit_width(x - 1) for x >= 2
  return static_cast<std::uint8_t>(std::bit_width(x - 1) + 1);
}

inline std::uint8_t f_transform(int x) {
  if (x < 0 || x > 255) throw InvalidInput("f_transform input outside [0, 255]: " + std::to_string(x));
  return f_transform_unchecked(static_cast<unsigned>(x));
}

/// L1 distance between already-discretized bin vectors.
inline unsigned dlog_bins(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) noexcept {
  unsigned sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += static_cast<unsigned>(std::abs(int{a[i]} - int{b[i]}));
  }
  return sum;
}

/// dLog distance over all 2M border and interior bins. Since histograms are
/// stored post-transform this is plain L1 over the stored values.
inline unsigned dlog_distance(const BicHistogram& a, const BicHistogram& b) {
  if (a.palette() != b.palette()) throw InvalidInput("dlog_distance: palette size mismatch");
  return dlog_bins(a.bins(), b.bins());
}

/// The leaf histograms under one tile, row-major within the tile's leaf
/// block. Non-owning; the referenced histograms must outlive the view.
class TileLeaves {
 public:
  static constexpr std::size_t kMaxLeaves = 16;

  TileLeaves() = default;

  void push_back(const BicHistogram& h) {
    if (count_ == kMaxLeaves) throw InvalidInput("tile has more than 16 leaves");
    leaves_[count_++] = &h;
  }

  std::size_t size() const noexcept { return count_; }
  const BicHistogram& operator[](std::size_t i) const noexcept { return *leaves_[i]; }

 private:
  std::array<const BicHistogram*, kMaxLeaves> leaves_{};
  std::size_t count_ = 0;
};

/**
 * Tile distance: mean dLog distance over positionally corresponding leaves.
 * Both tiles must sit at the same level, i.e. expose the same number of
 * leaves (16 for the whole image, 4 for a half-size tile, 1 for a leaf).
 */
inline double tile_distance(const TileLeaves& a, const TileLeaves& b) {
  const std::size_t m = a.size();
  if (m != b.size() || (m != 1 && m != 4 && m != 16)) {
    throw InvalidInput("tile_distance: level mismatch (" + std::to_string(a.size()) + " vs " +
                       std::to_string(b.size()) + " leaves)");
  }
  unsigned sum = 0;
  for (std::size_t i = 0; i < m; ++i) sum += dlog_distance(a[i], b[i]);
  return static_cast<double>(sum) / static_cast<double>(m);
}

}  // namespace cbsir
