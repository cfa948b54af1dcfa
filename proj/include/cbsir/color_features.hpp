#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cbsir/bic_histogram.hpp"
#include "cbsir/distance.hpp"
#include "cbsir/errors.hpp"

namespace cbsir {

struct Rgb888 {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb888&, const Rgb888&) = default;
};

/// Row-major 8-bit RGB pixel buffer.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<Rgb888> pixels;

  RgbImage() = default;
  RgbImage(int w, int h, Rgb888 fill = {}) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {
    if (w < 0 || h < 0) throw InvalidInput("negative image dimensions");
  }

  bool empty() const noexcept { return width == 0 || height == 0; }
  Rgb888& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const Rgb888& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const noexcept { return x1 - x0; }
  int height() const noexcept { return y1 - y0; }
  std::size_t area() const noexcept {
    return width() > 0 && height() > 0 ? static_cast<std::size_t>(width()) * height() : 0;
  }
};

namespace detail {

struct ChannelLevels {
  unsigned r, g, b;
};

// 64 colors: 4x4x4. 16 colors: 2x4x2, green gets the extra resolution.
constexpr ChannelLevels channel_levels(Palette p) noexcept {
  return p == Palette::Colors64 ? ChannelLevels{4, 4, 4} : ChannelLevels{2, 4, 2};
}

constexpr unsigned channel_bin(std::uint8_t v, unsigned levels) noexcept { return v * levels / 256u; }

}  // namespace detail

/// Uniform per-channel binning; index = rBin * (gLevels * bLevels) + gBin * bLevels + bBin.
constexpr ColorIndex quantize_color(Rgb888 p, Palette palette) noexcept {
  const auto lv = detail::channel_levels(palette);
  return static_cast<ColorIndex>(detail::channel_bin(p.r, lv.r) * (lv.g * lv.b) + detail::channel_bin(p.g, lv.g) * lv.b +
                                 detail::channel_bin(p.b, lv.b));
}

/// Quantized color per pixel, row-major.
struct ColorGrid {
  int width = 0;
  int height = 0;
  Palette palette = Palette::Colors64;
  std::vector<ColorIndex> colors;

  ColorIndex at(int x, int y) const { return colors[static_cast<std::size_t>(y) * width + x]; }
};

inline ColorGrid quantize_image(const RgbImage& image, Palette palette) {
  ColorGrid grid{image.width, image.height, palette, {}};
  grid.colors.reserve(image.pixels.size());
  for (const auto& p : image.pixels) grid.colors.push_back(quantize_color(p, palette));
  return grid;
}

enum class PixelClass : std::uint8_t { Border, Interior };

struct PixelClassMap {
  int width = 0;
  int height = 0;
  Palette palette = Palette::Colors64;
  std::vector<ColorIndex> colors;
  std::vector<PixelClass> classes;

  PixelClass class_at(int x, int y) const { return classes[static_cast<std::size_t>(y) * width + x]; }
  ColorIndex color_at(int x, int y) const { return colors[static_cast<std::size_t>(y) * width + x]; }
};

/**
 * A pixel is Interior iff all four 4-connected neighbours exist and share
 * its quantized color; every other pixel, including the whole image frame,
 * is Border.
 */
inline PixelClassMap classify_pixels(const ColorGrid& grid) {
  if (grid.width <= 0 || grid.height <= 0) throw InvalidInput("classify_pixels: empty image");
  if (grid.colors.size() != static_cast<std::size_t>(grid.width) * grid.height) {
    throw InvalidInput("classify_pixels: color buffer does not match dimensions");
  }
  PixelClassMap map{grid.width, grid.height, grid.palette, grid.colors,
                    std::vector<PixelClass>(grid.colors.size(), PixelClass::Border)};
  for (int y = 1; y + 1 < grid.height; ++y) {
    for (int x = 1; x + 1 < grid.width; ++x) {
      const ColorIndex c = grid.at(x, y);
      if (grid.at(x - 1, y) == c && grid.at(x + 1, y) == c && grid.at(x, y - 1) == c && grid.at(x, y + 1) == c) {
        map.classes[static_cast<std::size_t>(y) * grid.width + x] = PixelClass::Interior;
      }
    }
  }
  return map;
}

/// Raw per-color pixel counts of a region before normalization.
struct BicCounts {
  std::vector<std::uint32_t> border;
  std::vector<std::uint32_t> interior;
  std::size_t pixels = 0;
};

inline void check_region(const PixelClassMap& map, const PixelRect& r) {
  if (r.area() == 0) throw InvalidInput("degenerate (zero-area) region");
  if (r.x0 < 0 || r.y0 < 0 || r.x1 > map.width || r.y1 > map.height) {
    throw InvalidInput("region lies outside the image");
  }
}

inline BicCounts count_bic(const PixelClassMap& map, const PixelRect& region) {
  check_region(map, region);
  const std::size_t m = color_count(map.palette);
  BicCounts counts{std::vector<std::uint32_t>(m, 0), std::vector<std::uint32_t>(m, 0), region.area()};
  for (int y = region.y0; y < region.y1; ++y) {
    for (int x = region.x0; x < region.x1; ++x) {
      auto& bins = map.class_at(x, y) == PixelClass::Interior ? counts.interior : counts.border;
      ++bins[map.color_at(x, y)];
    }
  }
  return counts;
}

/// count / pixels scaled to [0, 255], rounded half up.
constexpr unsigned normalize_count(std::uint64_t count, std::uint64_t pixels) noexcept {
  return static_cast<unsigned>((2 * 255 * count + pixels) / (2 * pixels));
}

/**
 * Border and interior histograms of a region, jointly normalized by the
 * region's pixel count to [0, 255] and then log-discretized to [0, 9].
 */
inline BicHistogram extract_histogram(const PixelClassMap& map, const PixelRect& region) {
  const BicCounts counts = count_bic(map, region);
  const std::size_t m = counts.border.size();
  BicHistogram h(map.palette);
  for (std::size_t c = 0; c < m; ++c) {
    h.set_bin(c, f_transform_unchecked(normalize_count(counts.border[c], counts.pixels)));
    h.set_bin(m + c, f_transform_unchecked(normalize_count(counts.interior[c], counts.pixels)));
  }
  return h;
}

}  // namespace cbsir
