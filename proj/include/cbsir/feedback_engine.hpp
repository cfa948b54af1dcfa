#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cbsir/distance.hpp"
#include "cbsir/errors.hpp"
#include "cbsir/tiling.hpp"

namespace cbsir {

/// Immutable set of database signatures addressed by dense id 0..N-1.
class Corpus {
 public:
  Corpus() = default;
  Corpus(Palette palette, std::vector<ImageSignature> images) : palette_(palette), images_(std::move(images)) {
    for (std::size_t i = 0; i < images_.size(); ++i) {
      if (images_[i].id != i) throw InvalidInput("corpus ids must be dense and ordered");
      if (images_[i].palette() != palette_) throw InvalidInput("corpus mixes palette sizes");
    }
  }

  Palette palette() const noexcept { return palette_; }
  std::size_t size() const noexcept { return images_.size(); }
  bool empty() const noexcept { return images_.empty(); }
  bool contains(ImageId id) const noexcept { return id < images_.size(); }
  std::span<const ImageSignature> images() const noexcept { return images_; }

  const ImageSignature& at(ImageId id) const {
    if (!contains(id)) throw NotFound("no image with id " + std::to_string(id));
    return images_[id];
  }

 private:
  Palette palette_ = Palette::Colors64;
  std::vector<ImageSignature> images_;
};

/// Per-tile penalties of one database image; lower means more representative.
struct PenaltyTable {
  ImageId image = 0;
  std::array<double, kTileCount> penalties{};
  // Feedback iteration that produced the table; 0 for the initial table.
  int iteration = 0;

  static PenaltyTable uniform(ImageId id) {
    PenaltyTable t{id, {}, 0};
    t.penalties.fill(1.0 / static_cast<double>(kTileCount));
    return t;
  }

  double operator[](TileId tile) const noexcept { return penalties[tile.index()]; }
};

using PenaltyMap = std::map<ImageId, PenaltyTable>;

struct FeedbackSet {
  std::vector<ImageId> positives;
  std::vector<ImageId> negatives;

  bool empty() const noexcept { return positives.empty() && negatives.empty(); }
};

struct RankedImage {
  ImageId id = 0;
  double score = 0.0;

  friend bool operator==(const RankedImage&, const RankedImage&) = default;
};

/// Ascending by score, ties by ascending id.
using Ranking = std::vector<RankedImage>;

// ---------------------------------------------------------------------------
// Tile-to-image distances
// ---------------------------------------------------------------------------

/// dLog distance between every leaf of `a` (rows) and every leaf of `b`.
using LeafDistanceMatrix = std::array<std::array<unsigned, kLeafCount>, kLeafCount>;

inline LeafDistanceMatrix leaf_distances(const ImageSignature& a, const ImageSignature& b) {
  LeafDistanceMatrix d{};
  for (std::size_t i = 0; i < kLeafCount; ++i)
    for (std::size_t j = 0; j < kLeafCount; ++j) d[i][j] = dlog_distance(a.leaves[i], b.leaves[j]);
  return d;
}

/**
 * For every tile T of `owner`, the smallest tile distance between T and any
 * tile of `other` at T's level. At the top level there is only one
 * candidate, the other image as a whole.
 */
inline std::array<double, kTileCount> min_tile_distances(const ImageSignature& owner, const ImageSignature& other) {
  const LeafDistanceMatrix d = leaf_distances(owner, other);
  std::array<double, kTileCount> out{};
  for (int t = 0; t < static_cast<int>(kTileCount); ++t) {
    const TileId tile(t);
    const auto own = leaves_of(tile);
    const auto [first, last] = tile_range(tile.level());
    double best = INFINITY;
    for (int c = first; c < last; ++c) {
      const auto cand = leaves_of(TileId(c));
      unsigned sum = 0;
      for (std::size_t k = 0; k < own.size(); ++k) sum += d[own[k].index()][cand[k].index()];
      best = std::min(best, static_cast<double>(sum) / static_cast<double>(own.size()));
    }
    out[tile.index()] = best;
  }
  return out;
}

/**
 * Distance between a tile of `owner` and an image set: the sum over the set
 * of exp(min tile distance). Always >= set.size().
 */
inline double dts(const ImageSignature& owner, TileId tile, std::span<const ImageSignature* const> set, int level) {
  if (set.empty()) throw InvalidInput("dts: empty image set");
  if (tile.level() != level) throw InvalidInput("dts: tile does not sit at the requested level");
  double sum = 0.0;
  for (const ImageSignature* image : set) sum += std::exp(min_tile_distances(owner, *image)[tile.index()]);
  return sum;
}

// ---------------------------------------------------------------------------
// Tile penalty update
// ---------------------------------------------------------------------------

struct PenaltyUpdate {
  PenaltyTable table;
  std::array<double, kTileCount> weights{};
};

namespace detail {

// exp arguments are kept at or below this; above it both DTS vectors are
// divided by a common factor, which cancels in every ratio of the update.
inline constexpr double kMaxExpArgument = 650.0;

inline std::array<double, kTileCount> dts_all_tiles(const ImageSignature& owner,
                                                    std::span<const ImageSignature* const> set) {
  std::vector<std::array<double, kTileCount>> mins;
  mins.reserve(set.size());
  double largest = 0.0;
  for (const ImageSignature* image : set) {
    mins.push_back(min_tile_distances(owner, *image));
    for (double v : mins.back()) largest = std::max(largest, v);
  }
  const double shift = largest > kMaxExpArgument ? largest - kMaxExpArgument : 0.0;
  std::array<double, kTileCount> out{};
  for (std::size_t t = 0; t < kTileCount; ++t) {
    double sum = 0.0;
    for (const auto& m : mins) sum += std::exp(m[t] - shift);
    out[t] = sum;
  }
  return out;
}

}  // namespace detail

/**
 * Recomputes the penalties of one positive image from this round's feedback.
 *
 *   W_i  = 1 - DTS(T_i, IS-) / sum_j DTS(T_j, IS-)      (W_i = 1 if IS- empty)
 *   TP_i = W_i DTS(T_i, IS+) / sum_j W_j DTS(T_j, IS+)
 *
 * IS+ includes `positive` itself. Returns nullopt when IS+ is empty.
 */
inline std::optional<PenaltyUpdate> update_penalties(const ImageSignature& positive,
                                                     std::span<const ImageSignature* const> positives,
                                                     std::span<const ImageSignature* const> negatives, int iteration) {
  if (positives.empty()) return std::nullopt;
  if (std::none_of(positives.begin(), positives.end(), [&](const ImageSignature* p) { return p->id == positive.id; })) {
    throw InvalidInput("update_penalties: image " + std::to_string(positive.id) + " is not a positive example");
  }

  PenaltyUpdate out;
  out.weights.fill(1.0);
  if (!negatives.empty()) {
    const auto neg = detail::dts_all_tiles(positive, negatives);
    double total = 0.0;
    for (double v : neg) total += v;
    for (std::size_t i = 0; i < kTileCount; ++i) out.weights[i] = 1.0 - neg[i] / total;
  }

  const auto pos = detail::dts_all_tiles(positive, positives);
  std::array<double, kTileCount> weighted{};
  double total = 0.0;
  for (std::size_t i = 0; i < kTileCount; ++i) {
    weighted[i] = out.weights[i] * pos[i];
    total += weighted[i];
  }
  out.table.image = positive.id;
  out.table.iteration = iteration;
  for (std::size_t i = 0; i < kTileCount; ++i) out.table.penalties[i] = weighted[i] / total;
  return out;
}

inline std::vector<const ImageSignature*> resolve(const Corpus& corpus, std::span<const ImageId> ids) {
  std::vector<const ImageSignature*> out;
  out.reserve(ids.size());
  for (ImageId id : ids) out.push_back(&corpus.at(id));
  return out;
}

inline std::optional<PenaltyUpdate> update_penalties(const ImageSignature& positive, const Corpus& corpus,
                                                     const FeedbackSet& feedback, int iteration) {
  const auto pos = resolve(corpus, feedback.positives);
  const auto neg = resolve(corpus, feedback.negatives);
  return update_penalties(positive, pos, neg, iteration);
}

// ---------------------------------------------------------------------------
// Query refinement
// ---------------------------------------------------------------------------

/// Query layers before re-discretization: one real-valued vector per histogram.
struct RefinedLayers {
  std::array<std::vector<double>, 1> g1;
  std::array<std::vector<double>, 4> g2;
  std::array<std::vector<double>, 16> g4;
};

/// Lowest-penalty tile among the tiles at `level`; ties go to the lowest id.
inline TileId min_penalty_tile(const PenaltyTable& table, int level) {
  const auto [first, last] = tile_range(level);
  int best = first;
  for (int t = first + 1; t < last; ++t)
    if (table.penalties[static_cast<std::size_t>(t)] < table.penalties[static_cast<std::size_t>(best)]) best = t;
  return TileId(best);
}

inline const PenaltyTable& table_for(const PenaltyMap& tables, ImageId id) {
  const auto it = tables.find(id);
  if (it == tables.end()) throw InvalidInput("no penalty table for positive image " + std::to_string(id));
  return it->second;
}

/**
 * Weighted average of the positive images' minimum-penalty tiles, per level,
 * with weights 1 - TPmin. The whole-image tile feeds the 4x4 layer, the best
 * half-size tile the 2x2 layer and the best leaf the 1x1 layer, each
 * leaf-wise and positionally.
 */
inline RefinedLayers refine_query_features(std::span<const ImageSignature* const> positives, const PenaltyMap& tables) {
  if (positives.empty()) throw InvalidInput("refine_query_features: no positive images");
  const std::size_t bins = positives.front()->leaves[0].size();

  RefinedLayers out;
  std::vector<TileId> best(positives.size());
  std::vector<double> weight(positives.size());
  auto refine_layer = [&](auto& layer, int level) {
    double largest = 0.0;
    for (std::size_t p = 0; p < positives.size(); ++p) {
      const PenaltyTable& table = table_for(tables, positives[p]->id);
      best[p] = min_penalty_tile(table, level);
      weight[p] = 1.0 - table[best[p]];
      largest = std::max(largest, weight[p]);
    }
    // relative to the largest weight
    for (double& w : weight) w = largest > 0.0 ? w / largest : 1.0;

    for (auto& v : layer) v.assign(bins, 0.0);
    double weight_sum = 0.0;
    for (std::size_t p = 0; p < positives.size(); ++p) {
      weight_sum += weight[p];
      const auto cells = leaves_of(best[p]);
      for (std::size_t k = 0; k < cells.size(); ++k) {
        const auto src = positives[p]->leaf(cells[k]).bins();
        for (std::size_t j = 0; j < bins; ++j) layer[k][j] += weight[p] * src[j];
      }
    }
    for (auto& v : layer)
      for (double& x : v) x /= weight_sum;
  };
  refine_layer(out.g4, 0);
  refine_layer(out.g2, 1);
  refine_layer(out.g1, 2);
  return out;
}

/// Round half up and clamp to [0, 9].
inline std::uint8_t discretize_bin(double x) {
  const double r = std::floor(x + 0.5);
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, static_cast<double>(kMaxBinValue)));
}

inline QuerySignature discretize(const RefinedLayers& layers, Palette palette) {
  auto to_hist = [&](const std::vector<double>& v) {
    BicHistogram h(palette);
    for (std::size_t j = 0; j < v.size(); ++j) h.set_bin(j, discretize_bin(v[j]));
    return h;
  };
  QuerySignature q;
  q.g1[0] = to_hist(layers.g1[0]);
  for (std::size_t i = 0; i < 4; ++i) q.g2[i] = to_hist(layers.g2[i]);
  for (std::size_t i = 0; i < 16; ++i) q.g4[i] = to_hist(layers.g4[i]);
  return q;
}

/// Refined query, or `current` unchanged when there are no positives.
inline QuerySignature refine_query(const QuerySignature& current, std::span<const ImageSignature* const> positives,
                                   const PenaltyMap& tables) {
  if (positives.empty()) return current;
  return discretize(refine_query_features(positives, tables), current.palette());
}

// ---------------------------------------------------------------------------
// Ranking
// ---------------------------------------------------------------------------

/// Minimum over all 26 tiles of penalty x tile distance to the query layer
/// of matching granularity.
inline double image_distance(const QuerySignature& query, const ImageSignature& image, const PenaltyTable& table) {
  double best = INFINITY;
  // whole image vs the 4x4 query layer
  {
    unsigned sum = 0;
    for (std::size_t i = 0; i < kLeafCount; ++i) sum += dlog_distance(image.leaves[i], query.g4[i]);
    best = std::min(best, table.penalties[0] * (static_cast<double>(sum) / 16.0));
  }
  for (int t = 1; t <= static_cast<int>(kLevel1Count); ++t) {
    const auto cells = leaves_of(TileId(t));
    unsigned sum = 0;
    for (std::size_t k = 0; k < cells.size(); ++k) sum += dlog_distance(image.leaf(cells[k]), query.g2[k]);
    best = std::min(best, table.penalties[static_cast<std::size_t>(t)] * (static_cast<double>(sum) / 4.0));
  }
  for (std::size_t i = 0; i < kLeafCount; ++i) {
    const double dt = static_cast<double>(dlog_distance(image.leaves[i], query.g1[0]));
    best = std::min(best, table.penalties[1 + kLevel1Count + i] * dt);
  }
  return best;
}

inline void sort_ranking(Ranking& ranking) {
  std::sort(ranking.begin(), ranking.end(), [](const RankedImage& a, const RankedImage& b) {
    return a.score != b.score ? a.score < b.score : a.id < b.id;
  });
}

/// Scores every image; images without a table use uniform penalties.
inline Ranking rank_images(const QuerySignature& query, std::span<const ImageSignature> corpus,
                           const PenaltyMap& tables) {
  if (corpus.empty()) throw InvalidInput("rank_images: empty corpus");
  const PenaltyTable uniform = PenaltyTable::uniform(0);
  Ranking ranking;
  ranking.reserve(corpus.size());
  for (const ImageSignature& image : corpus) {
    const auto it = tables.find(image.id);
    const PenaltyTable& table = it == tables.end() ? uniform : it->second;
    ranking.push_back({image.id, image_distance(query, image, table)});
  }
  sort_ranking(ranking);
  return ranking;
}

// ---------------------------------------------------------------------------
// Session loop
// ---------------------------------------------------------------------------

struct IterationRecord {
  int iteration = 1;
  std::vector<ImageId> shown;
  // Feedback given on this page; empty until the next round is submitted.
  FeedbackSet feedback;
};

struct SessionState {
  QuerySignature query;
  PenaltyMap penalties;
  int iteration = 1;
  std::size_t page_size = 20;
  std::vector<IterationRecord> history;

  const std::vector<ImageId>& last_shown() const { return history.back().shown; }
};

inline std::vector<ImageId> top_ids(const Ranking& ranking, std::size_t k) {
  std::vector<ImageId> ids;
  const std::size_t n = std::min(k, ranking.size());
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.push_back(ranking[i].id);
  return ids;
}

/// First ranking of a session: the given query with uniform penalties.
inline std::pair<Ranking, SessionState> start_session(QuerySignature query, const Corpus& corpus,
                                                      std::size_t page_size = 20) {
  if (page_size == 0) throw InvalidInput("page size must be at least 1");
  if (query.palette() != corpus.palette()) throw InvalidInput("query palette differs from the index palette");
  SessionState state;
  state.query = std::move(query);
  state.page_size = page_size;
  Ranking ranking = rank_images(state.query, corpus.images(), state.penalties);
  state.history.push_back({1, top_ids(ranking, page_size), {}});
  return {std::move(ranking), std::move(state)};
}

/// Disjoint, duplicate-free, and drawn from the page shown last.
inline void validate_feedback(const SessionState& state, const FeedbackSet& feedback) {
  const std::set<ImageId> shown(state.last_shown().begin(), state.last_shown().end());
  std::set<ImageId> seen;
  auto check = [&](const std::vector<ImageId>& ids) {
    for (ImageId id : ids) {
      if (!shown.count(id)) throw InvalidInput("image " + std::to_string(id) + " was not on the last shown page");
      if (!seen.insert(id).second) {
        throw InvalidInput("image " + std::to_string(id) + " marked more than once");
      }
    }
  };
  check(feedback.positives);
  check(feedback.negatives);
}

/**
 * One feedback round: update the penalty table of every positive image,
 * refine the query from the positives, re-rank and advance the iteration.
 */
inline std::pair<Ranking, SessionState> run_iteration(SessionState state, const FeedbackSet& feedback,
                                                      const Corpus& corpus) {
  if (state.history.empty()) throw InvalidInput("run_iteration: session has no initial ranking");
  validate_feedback(state, feedback);
  state.history.back().feedback = feedback;

  if (!feedback.positives.empty()) {
    const auto pos = resolve(corpus, feedback.positives);
    const auto neg = resolve(corpus, feedback.negatives);
    for (const ImageSignature* image : pos) {
      state.penalties[image->id] = update_penalties(*image, pos, neg, state.iteration)->table;
    }
    state.query = refine_query(state.query, pos, state.penalties);
  }

  Ranking ranking = rank_images(state.query, corpus.images(), state.penalties);
  ++state.iteration;
  state.history.push_back({state.iteration, top_ids(ranking, state.page_size), {}});
  return {std::move(ranking), std::move(state)};
}

}  // namespace cbsir
