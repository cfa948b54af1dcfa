#pragma once

// Brute-force reference implementations used only by the tests. They share
// data types with the library but none of its algorithms: tile coverage is
// derived from tile geometry, distances are recomputed from raw bins, and
// every formula is evaluated literally.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "cbsir/cbsir.hpp"

namespace oracle {

using cbsir::BicHistogram;
using cbsir::ImageId;
using cbsir::ImageSignature;
using cbsir::Palette;
using cbsir::QuerySignature;

// --- quantization -----------------------------------------------------------

inline unsigned bin_by_edges(unsigned v, unsigned levels) {
  for (unsigned k = 0; k < levels; ++k) {
    const unsigned lo = 256 * k / levels, hi = 256 * (k + 1) / levels;
    if (v >= lo && v < hi) return k;
  }
  return ~0u;
}

inline unsigned quantize(cbsir::Rgb888 p, int colors) {
  const unsigned lr = colors == 64 ? 4 : 2, lg = 4, lb = colors == 64 ? 4 : 2;
  return bin_by_edges(p.r, lr) * lg * lb + bin_by_edges(p.g, lg) * lb + bin_by_edges(p.b, lb);
}

// --- border / interior --------------------------------------------------------

inline std::vector<bool> interior_mask(const std::vector<int>& colors, int w, int h) {
  std::vector<bool> out(colors.size(), false);
  const int dx[] = {1, -1, 0, 0}, dy[] = {0, 0, 1, -1};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      bool all_same = true;
      for (int n = 0; n < 4; ++n) {
        const int nx = x + dx[n], ny = y + dy[n];
        if (nx < 0 || ny < 0 || nx >= w || ny >= h || colors[ny * w + nx] != colors[y * w + x]) all_same = false;
      }
      out[y * w + x] = all_same;
    }
  return out;
}

// --- f and dLog ---------------------------------------------------------------

inline int f(double x) {
  if (x == 0) return 0;
  if (x <= 1) return 1;
  return static_cast<int>(std::ceil(std::log2(x))) + 1;
}

inline long dlog(const BicHistogram& a, const BicHistogram& b) {
  long sum = 0;
  for (std::size_t c = 0; c < a.colors(); ++c) {
    sum += std::labs(long{a.border(static_cast<cbsir::ColorIndex>(c))} - long{b.border(static_cast<cbsir::ColorIndex>(c))});
  }
  for (std::size_t c = 0; c < a.colors(); ++c) {
    sum += std::labs(long{a.interior(static_cast<cbsir::ColorIndex>(c))} -
                     long{b.interior(static_cast<cbsir::ColorIndex>(c))});
  }
  return sum;
}

// --- tile geometry ------------------------------------------------------------

struct Tile {
  int level;
  double x0, y0, size;  // fractions of the image side
};

inline std::vector<Tile> all_tiles() {
  std::vector<Tile> t{{0, 0.0, 0.0, 1.0}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t.push_back({1, j * 0.25, i * 0.25, 0.5});
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) t.push_back({2, c * 0.25, r * 0.25, 0.25});
  return t;
}

/// Row-major leaf indices whose cell centre lies inside the tile.
inline std::vector<int> covered_leaves(const Tile& t) {
  std::vector<int> out;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      const double cx = (c + 0.5) / 4, cy = (r + 0.5) / 4;
      if (cx > t.x0 && cx < t.x0 + t.size && cy > t.y0 && cy < t.y0 + t.size) out.push_back(r * 4 + c);
    }
  return out;
}

inline double dt_images(const ImageSignature& a, const Tile& ta, const ImageSignature& b, const Tile& tb) {
  const auto la = covered_leaves(ta), lb = covered_leaves(tb);
  long sum = 0;
  for (std::size_t k = 0; k < la.size(); ++k) sum += dlog(a.leaves[la[k]], b.leaves[lb[k]]);
  return static_cast<double>(sum) / static_cast<double>(la.size());
}

inline std::vector<BicHistogram> query_layer(const QuerySignature& q, int level) {
  if (level == 0) return {q.g4.begin(), q.g4.end()};
  if (level == 1) return {q.g2.begin(), q.g2.end()};
  return {q.g1[0]};
}

inline double dt_query(const ImageSignature& a, const Tile& ta, const QuerySignature& q) {
  const auto la = covered_leaves(ta);
  const auto layer = query_layer(q, ta.level);
  long sum = 0;
  for (std::size_t k = 0; k < la.size(); ++k) sum += dlog(a.leaves[la[k]], layer[k]);
  return static_cast<double>(sum) / static_cast<double>(la.size());
}

// --- feedback formulas ----------------------------------------------------------

inline double dts(const ImageSignature& owner, int tile, const std::vector<const ImageSignature*>& set) {
  const auto tiles = all_tiles();
  const Tile& t = tiles[tile];
  double sum = 0.0;
  for (const auto* img : set) {
    double best = INFINITY;
    for (const Tile& cand : tiles)
      if (cand.level == t.level) best = std::min(best, dt_images(owner, t, *img, cand));
    sum += std::exp(best);
  }
  return sum;
}

struct Penalties {
  std::array<double, 26> tp{};
  std::array<double, 26> w{};
};

inline Penalties penalties(const ImageSignature& owner, const std::vector<const ImageSignature*>& pos,
                           const std::vector<const ImageSignature*>& neg) {
  Penalties out;
  std::array<double, 26> dpos{}, dneg{};
  for (int i = 0; i < 26; ++i) {
    dpos[i] = dts(owner, i, pos);
    dneg[i] = neg.empty() ? 0.0 : dts(owner, i, neg);
  }
  double neg_sum = 0.0;
  for (int j = 0; j < 26; ++j) neg_sum += dneg[j];
  for (int i = 0; i < 26; ++i) out.w[i] = neg.empty() ? 1.0 : 1.0 - dneg[i] / neg_sum;
  double denom = 0.0;
  for (int j = 0; j < 26; ++j) denom += out.w[j] * dpos[j];
  for (int i = 0; i < 26; ++i) out.tp[i] = out.w[i] * dpos[i] / denom;
  return out;
}

/// Pre-rounding refined layers: [level][histogram][bin].
inline std::array<std::vector<std::vector<double>>, 3> refine(const std::vector<const ImageSignature*>& pos,
                                                                const std::map<ImageId, std::array<double, 26>>& tp) {
  const auto tiles = all_tiles();
  std::array<std::vector<std::vector<double>>, 3> out;
  const std::size_t bins = pos.front()->leaves[0].size();
  for (int level = 0; level < 3; ++level) {
    const int first = level == 0 ? 0 : (level == 1 ? 1 : 10);
    const int last = level == 0 ? 1 : (level == 1 ? 10 : 26);
    const std::size_t m = covered_leaves(tiles[first]).size();
    std::vector<std::vector<double>> num(m, std::vector<double>(bins, 0.0));
    double den = 0.0;
    for (const auto* img : pos) {
      const auto& t = tp.at(img->id);
      int best = first;
      for (int i = first; i < last; ++i)
        if (t[i] < t[best]) best = i;
      const double w = 1.0 - t[best];
      den += w;
      const auto leaves = covered_leaves(tiles[best]);
      for (std::size_t k = 0; k < m; ++k)
        for (std::size_t j = 0; j < bins; ++j) num[k][j] += w * img->leaves[leaves[k]].bins()[j];
    }
    for (auto& h : num)
      for (double& x : h) x /= den;
    // level 0 feeds the 16-cell layer, level 2 the single whole-query layer
    out[level] = num;
  }
  return out;
}

inline QuerySignature to_query(const std::array<std::vector<std::vector<double>>, 3>& layers, Palette p) {
  auto h = [&](const std::vector<double>& v) {
    std::vector<std::uint8_t> bins;
    for (double x : v) bins.push_back(static_cast<std::uint8_t>(std::min(9.0, std::max(0.0, std::floor(x + 0.5)))));
    return BicHistogram(p, bins);
  };
  QuerySignature q;
  for (int i = 0; i < 16; ++i) q.g4[i] = h(layers[0][i]);
  for (int i = 0; i < 4; ++i) q.g2[i] = h(layers[1][i]);
  q.g1[0] = h(layers[2][0]);
  return q;
}

struct Scored {
  ImageId id;
  double score;
};

inline std::vector<Scored> rank(const QuerySignature& q, const std::vector<ImageSignature>& corpus,
                                const std::map<ImageId, std::array<double, 26>>& tp) {
  const auto tiles = all_tiles();
  std::vector<Scored> out;
  for (const auto& img : corpus) {
    std::array<double, 26> pen;
    pen.fill(1.0 / 26.0);
    if (auto it = tp.find(img.id); it != tp.end()) pen = it->second;
    double best = INFINITY;
    for (int i = 0; i < 26; ++i) best = std::min(best, pen[i] * dt_query(img, tiles[i], q));
    out.push_back({img.id, best});
  }
  std::stable_sort(out.begin(), out.end(), [](const Scored& a, const Scored& b) {
    if (a.score < b.score) return true;
    if (b.score < a.score) return false;
    return a.id < b.id;
  });
  return out;
}

// --- random data --------------------------------------------------------------

inline BicHistogram random_histogram(std::mt19937_64& rng, Palette p, int max_bin = 9) {
  std::uniform_int_distribution<int> d(0, max_bin);
  std::vector<std::uint8_t> bins(2 * cbsir::color_count(p));
  for (auto& b : bins) b = static_cast<std::uint8_t>(d(rng));
  return BicHistogram(p, bins);
}

/// Sparse histogram: most bins zero, like real BIC features.
inline BicHistogram sparse_histogram(std::mt19937_64& rng, Palette p, int nonzero) {
  std::vector<std::uint8_t> bins(2 * cbsir::color_count(p), 0);
  std::uniform_int_distribution<std::size_t> pos(0, bins.size() - 1);
  std::uniform_int_distribution<int> val(1, 9);
  for (int i = 0; i < nonzero; ++i) bins[pos(rng)] = static_cast<std::uint8_t>(val(rng));
  return BicHistogram(p, bins);
}

inline ImageSignature random_signature(std::mt19937_64& rng, Palette p, ImageId id, int nonzero = 12) {
  ImageSignature s{id, {}};
  for (auto& leaf : s.leaves) leaf = sparse_histogram(rng, p, nonzero);
  return s;
}

inline QuerySignature random_query(std::mt19937_64& rng, Palette p, int nonzero = 12) {
  QuerySignature q;
  q.g1[0] = sparse_histogram(rng, p, nonzero);
  for (auto& h : q.g2) h = sparse_histogram(rng, p, nonzero);
  for (auto& h : q.g4) h = sparse_histogram(rng, p, nonzero);
  return q;
}

}  // namespace oracle
