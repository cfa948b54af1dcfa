#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "cbsir/bic_histogram.hpp"
#include "cbsir/color_features.hpp"
#include "cbsir/distance.hpp"
#include "cbsir/errors.hpp"

namespace cbsir {

using ImageId = std::uint32_t;

inline constexpr int kGridSide = 4;
inline constexpr std::size_t kLeafCount = 16;
inline constexpr std::size_t kLevel1Count = 9;
inline constexpr std::size_t kTileCount = 1 + kLevel1Count + kLeafCount;

/// One cell of the 4x4 leaf grid.
struct LeafCell {
  int row = 0;
  int col = 0;

  constexpr std::size_t index() const noexcept { return static_cast<std::size_t>(row * kGridSide + col); }
  friend constexpr bool operator==(const LeafCell&, const LeafCell&) = default;
  friend constexpr auto operator<=>(const LeafCell&, const LeafCell&) = default;
};

/**
 * Logical tile of the three-level partition.
 *   0        the whole image
 *   1..9     half-side tiles at quarter offsets, row-major over a 3x3 layout
 *   10..25   the 4x4 leaves, row-major
 */
class TileId {
 public:
  constexpr TileId() = default;
  constexpr explicit TileId(int id) : id_(static_cast<std::uint8_t>(id)) {
    if (id < 0 || id >= static_cast<int>(kTileCount)) throw InvalidInput("TileId out of range: " + std::to_string(id));
  }

  static constexpr TileId root() { return TileId(0); }
  static constexpr TileId level1(int row, int col) { return TileId(1 + 3 * row + col); }
  static constexpr TileId leaf(int row, int col) { return TileId(1 + static_cast<int>(kLevel1Count) + 4 * row + col); }

  constexpr int value() const noexcept { return id_; }
  constexpr std::size_t index() const noexcept { return id_; }

  constexpr int level() const noexcept { return id_ == 0 ? 0 : (id_ <= static_cast<int>(kLevel1Count) ? 1 : 2); }

  friend constexpr bool operator==(TileId, TileId) = default;
  friend constexpr auto operator<=>(TileId, TileId) = default;

 private:
  std::uint8_t id_ = 0;
};

/// First and one-past-last TileId value at each level.
constexpr std::pair<int, int> tile_range(int level) {
  switch (level) {
    case 0: return {0, 1};
    case 1: return {1, 1 + static_cast<int>(kLevel1Count)};
    case 2: return {1 + static_cast<int>(kLevel1Count), static_cast<int>(kTileCount)};
    default: throw InvalidInput("tile level must be 0, 1 or 2");
  }
}

/// Leaf count of any tile at `level`.
constexpr std::size_t leaves_per_tile(int level) { return level == 0 ? 16 : (level == 1 ? 4 : 1); }

namespace detail {

struct TileInfo {
  int level = 0;
  // Rectangle in quarter-image units: [qx0, qx1) x [qy0, qy1).
  int qx0 = 0, qy0 = 0, qx1 = 0, qy1 = 0;
  std::size_t leaf_count = 0;
  std::array<LeafCell, kLeafCount> leaves{};
};

constexpr std::array<TileInfo, kTileCount> make_topology() {
  std::array<TileInfo, kTileCount> t{};
  auto fill = [](TileInfo& info, int level, int row, int col, int side) {
    info.level = level;
    info.qx0 = col;
    info.qy0 = row;
    info.qx1 = col + side;
    info.qy1 = row + side;
    info.leaf_count = 0;
    for (int r = row; r < row + side; ++r)
      for (int c = col; c < col + side; ++c) info.leaves[info.leaf_count++] = LeafCell{r, c};
  };
  fill(t[0], 0, 0, 0, 4);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) fill(t[static_cast<std::size_t>(1 + 3 * i + j)], 1, i, j, 2);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) fill(t[static_cast<std::size_t>(10 + 4 * r + c)], 2, r, c, 1);
  return t;
}

inline constexpr std::array<TileInfo, kTileCount> kTopology = make_topology();

}  // namespace detail

/// Leaf cells covered by a tile, row-major within its block.
constexpr std::span<const LeafCell> leaves_of(TileId tile) noexcept {
  const auto& info = detail::kTopology[tile.index()];
  return {info.leaves.data(), info.leaf_count};
}

/// Pixel span [floor(i*extent/parts), floor((i+1)*extent/parts)).
constexpr std::pair<int, int> grid_span(int extent, int parts, int i) noexcept {
  return {static_cast<int>(static_cast<long long>(i) * extent / parts),
          static_cast<int>(static_cast<long long>(i + 1) * extent / parts)};
}

/// Pixel rectangle of cell (row, col) of an `parts` x `parts` grid.
constexpr PixelRect grid_cell_rect(int width, int height, int parts, int row, int col) noexcept {
  const auto [x0, x1] = grid_span(width, parts, col);
  const auto [y0, y1] = grid_span(height, parts, row);
  return PixelRect{x0, y0, x1, y1};
}

/// Pixel rectangle of a logical tile: union of its leaves' rectangles.
constexpr PixelRect tile_rect(int width, int height, TileId tile) noexcept {
  const auto& info = detail::kTopology[tile.index()];
  return PixelRect{grid_span(width, 4, info.qx0).first, grid_span(height, 4, info.qy0).first,
                   grid_span(width, 4, info.qx1 - 1).second, grid_span(height, 4, info.qy1 - 1).second};
}

/// Database image features: the 16 leaf histograms, row-major. The tile tree
/// above them is the constant topology and is never stored.
struct ImageSignature {
  ImageId id = 0;
  std::array<BicHistogram, kLeafCount> leaves;

  Palette palette() const noexcept { return leaves[0].palette(); }
  const BicHistogram& leaf(LeafCell cell) const noexcept { return leaves[cell.index()]; }

  friend bool operator==(const ImageSignature&, const ImageSignature&) = default;
};

/// Query features at three granularities: whole query, quadrants, sixteenths.
struct QuerySignature {
  std::array<BicHistogram, 1> g1;
  std::array<BicHistogram, 4> g2;
  std::array<BicHistogram, 16> g4;

  Palette palette() const noexcept { return g1[0].palette(); }

  friend bool operator==(const QuerySignature&, const QuerySignature&) = default;
};

inline void check_signature_size(int width, int height) {
  if (width < kGridSide || height < kGridSide) {
    throw InvalidInput("image must be at least 4x4 pixels, got " + std::to_string(width) + "x" + std::to_string(height));
  }
}

inline ImageSignature build_image_signature(const PixelClassMap& map, ImageId id = 0) {
  check_signature_size(map.width, map.height);
  ImageSignature sig{id, {}};
  for (int r = 0; r < kGridSide; ++r)
    for (int c = 0; c < kGridSide; ++c)
      sig.leaves[static_cast<std::size_t>(r * kGridSide + c)] =
          extract_histogram(map, grid_cell_rect(map.width, map.height, kGridSide, r, c));
  return sig;
}

inline ImageSignature build_image_signature(const RgbImage& image, Palette palette, ImageId id = 0) {
  check_signature_size(image.width, image.height);
  return build_image_signature(classify_pixels(quantize_image(image, palette)), id);
}

inline QuerySignature build_query_signature(const PixelClassMap& map) {
  check_signature_size(map.width, map.height);
  QuerySignature q;
  q.g1[0] = extract_histogram(map, PixelRect{0, 0, map.width, map.height});
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      q.g2[static_cast<std::size_t>(r * 2 + c)] = extract_histogram(map, grid_cell_rect(map.width, map.height, 2, r, c));
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      q.g4[static_cast<std::size_t>(r * 4 + c)] = extract_histogram(map, grid_cell_rect(map.width, map.height, 4, r, c));
  return q;
}

inline QuerySignature build_query_signature(const RgbImage& image, Palette palette) {
  check_signature_size(image.width, image.height);
  return build_query_signature(classify_pixels(quantize_image(image, palette)));
}

/// Leaf histograms of one tile of a database image.
inline TileLeaves tile_leaves(const ImageSignature& image, TileId tile) {
  TileLeaves out;
  for (const LeafCell& cell : leaves_of(tile)) out.push_back(image.leaf(cell));
  return out;
}

/// The query layer compared against tiles at `level`: the whole-image tile
/// meets the 4x4 layer, half-size tiles the 2x2 layer, leaves the 1x1 layer.
inline TileLeaves query_leaves(const QuerySignature& query, int level) {
  TileLeaves out;
  switch (level) {
    case 0: for (const auto& h : query.g4) out.push_back(h); break;
    case 1: for (const auto& h : query.g2) out.push_back(h); break;
    case 2: out.push_back(query.g1[0]); break;
    default: throw InvalidInput("tile level must be 0, 1 or 2");
  }
  return out;
}

inline double tile_distance(const ImageSignature& a, TileId ta, const ImageSignature& b, TileId tb) {
  if (ta.level() != tb.level()) throw InvalidInput("tile_distance: tiles at different levels");
  return tile_distance(tile_leaves(a, ta), tile_leaves(b, tb));
}

inline double tile_distance(const ImageSignature& image, TileId tile, const QuerySignature& query) {
  return tile_distance(tile_leaves(image, tile), query_leaves(query, tile.level()));
}

}  // namespace cbsir
