#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "cbsir/color_features.hpp"
#include "cbsir/errors.hpp"
#include "cbsir/image_io.hpp"
#include "cbsir/tiling.hpp"

// Synthetic planted-containment corpus. Each query defines a category: a
// pattern, a palette and a backdrop scene. Its answer images are mostly
// drawn over the backdrop with their own clutter, and each holds an
// instance of the pattern. The first host (the "original") holds the
// pattern verbatim and the query is its pixel crop; the others receive a
// flipped, cut, rescaled and recolored instance, often repainted.

namespace cbsir {

struct SynthConfig {
  int backgrounds = 500;
  int queries = 20;
  std::uint64_t seed = 1;
  // Mean fraction of a database image covered by its query.
  double query_area = 0.18;
  int min_answers = 3;
  int max_answers = 19;
  // Perturbation of the non-original instances.
  double scale_jitter = 0.4;
  int color_jitter = 48;
  double cut_fraction = 0.5;
  // Probability that an instance is repainted from the query's palette
  // instead of copied.
  double repaint = 0.7;
  // Probability that a host is drawn over its query's category backdrop.
  double theme = 0.8;
  int overlay_shapes = 20;
};

struct SynthCorpus {
  std::vector<RgbImage> images;
  std::vector<RgbImage> queries;
  // answers[q][0] is the image the query was cropped from.
  std::vector<std::vector<ImageId>> answers;
  std::vector<PixelRect> query_origin;
};

namespace detail {

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index)};
  return Rng(seq);
}

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline Rgb888 random_color(Rng& rng) {
  return {static_cast<std::uint8_t>(uniform_int(rng, 0, 255)), static_cast<std::uint8_t>(uniform_int(rng, 0, 255)),
          static_cast<std::uint8_t>(uniform_int(rng, 0, 255))};
}

inline std::uint8_t clamp_channel(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

inline Rgb888 shift(Rgb888 c, int d) { return {clamp_channel(c.r + d), clamp_channel(c.g + d), clamp_channel(c.b + d)}; }

inline void fill_rect(RgbImage& img, int x0, int y0, int x1, int y1, Rgb888 c) {
  for (int y = std::max(0, y0); y < std::min(img.height, y1); ++y)
    for (int x = std::max(0, x0); x < std::min(img.width, x1); ++x) img.at(x, y) = c;
}

inline void fill_ellipse(RgbImage& img, int cx, int cy, int rx, int ry, Rgb888 c) {
  for (int y = std::max(0, cy - ry); y < std::min(img.height, cy + ry + 1); ++y)
    for (int x = std::max(0, cx - rx); x < std::min(img.width, cx + rx + 1); ++x) {
      const double dx = static_cast<double>(x - cx) / std::max(rx, 1);
      const double dy = static_cast<double>(y - cy) / std::max(ry, 1);
      if (dx * dx + dy * dy <= 1.0) img.at(x, y) = c;
    }
}

inline void fill_stripes(RgbImage& img, int x0, int y0, int x1, int y1, Rgb888 a, Rgb888 b, int period, bool vertical) {
  for (int y = std::max(0, y0); y < std::min(img.height, y1); ++y)
    for (int x = std::max(0, x0); x < std::min(img.width, x1); ++x) {
      const int t = vertical ? x : y;
      img.at(x, y) = (t / period) % 2 ? a : b;
    }
}

/// A few flat shapes and one textured region over a random base color.
inline void paint_scene(RgbImage& img, Rng& rng, const std::vector<Rgb888>& palette, int shapes) {
  auto pick = [&] { return palette[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(palette.size()) - 1))]; };
  fill_rect(img, 0, 0, img.width, img.height, pick());
  for (int s = 0; s < shapes; ++s) {
    const int w = uniform_int(rng, img.width / 8, img.width / 2);
    const int h = uniform_int(rng, img.height / 8, img.height / 2);
    const int x = uniform_int(rng, -w / 4, img.width - w / 2);
    const int y = uniform_int(rng, -h / 4, img.height - h / 2);
    switch (uniform_int(rng, 0, 2)) {
      case 0: fill_rect(img, x, y, x + w, y + h, pick()); break;
      case 1: fill_ellipse(img, x + w / 2, y + h / 2, w / 2, h / 2, pick()); break;
      default: fill_stripes(img, x, y, x + w, y + h, pick(), pick(), uniform_int(rng, 1, 4), uniform_int(rng, 0, 1)); break;
    }
  }
}

inline void add_noise(RgbImage& img, Rng& rng, int amplitude, double fraction) {
  std::bernoulli_distribution hit(fraction);
  for (auto& p : img.pixels)
    if (hit(rng)) p = shift(p, uniform_int(rng, -amplitude, amplitude));
}

inline void paste(RgbImage& dst, const RgbImage& src, int x0, int y0) {
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x) dst.at(x0 + x, y0 + y) = src.at(x, y);
}

inline RgbImage resize_nearest(const RgbImage& src, int w, int h) {
  RgbImage out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.at(x, y) = src.at(x * src.width / w, y * src.height / h);
  return out;
}

/// One of the 8 rotations/reflections of the square grid.
inline RgbImage dihedral(const RgbImage& src, int k) {
  const bool swap = k & 4;
  RgbImage out(swap ? src.height : src.width, swap ? src.width : src.height);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      int sx = swap ? y : x, sy = swap ? x : y;
      if (k & 1) sx = src.width - 1 - sx;
      if (k & 2) sy = src.height - 1 - sy;
      out.at(x, y) = src.at(sx, sy);
    }
  return out;
}

inline RgbImage perturb(const RgbImage& pattern, Rng& rng, const SynthConfig& cfg, int max_w, int max_h) {
  std::uniform_real_distribution<double> scale(1.0 - cfg.scale_jitter, 1.0 + cfg.scale_jitter);
  std::uniform_real_distribution<double> keep(1.0 - cfg.cut_fraction, 1.0);
  RgbImage img = dihedral(pattern, uniform_int(rng, 0, 7));
  const int cw = std::max(2, static_cast<int>(img.width * keep(rng)));
  const int ch = std::max(2, static_cast<int>(img.height * keep(rng)));
  const int cx = uniform_int(rng, 0, img.width - cw), cy = uniform_int(rng, 0, img.height - ch);
  RgbImage cut(cw, ch);
  for (int y = 0; y < ch; ++y)
    for (int x = 0; x < cw; ++x) cut.at(x, y) = img.at(cx + x, cy + y);
  const double s = scale(rng);
  img = resize_nearest(cut, std::clamp(static_cast<int>(cw * s), 2, max_w), std::clamp(static_cast<int>(ch * s), 2, max_h));
  const int dr = uniform_int(rng, -cfg.color_jitter, cfg.color_jitter);
  const int dg = uniform_int(rng, -cfg.color_jitter, cfg.color_jitter);
  const int db = uniform_int(rng, -cfg.color_jitter, cfg.color_jitter);
  for (auto& p : img.pixels) p = {clamp_channel(p.r + dr), clamp_channel(p.g + dg), clamp_channel(p.b + db)};
  return img;
}

// Database image shapes; query side is derived from each query's first host.
inline constexpr std::pair<int, int> kImageSizes[] = {{128, 128}, {160, 120}, {120, 160}, {144, 112}};

}  // namespace detail

inline SynthCorpus generate_synthetic_corpus(const SynthConfig& cfg) {
  using namespace detail;
  if (cfg.backgrounds < 1 || cfg.queries < 0) throw InvalidInput("synth: need at least one background");
  if (cfg.min_answers < 1 || cfg.max_answers < cfg.min_answers) throw InvalidInput("synth: bad answer-set bounds");

  SynthCorpus out;
  // Backgrounds.
  for (int i = 0; i < cfg.backgrounds; ++i) {
    Rng rng = make_rng(cfg.seed, 1, static_cast<std::uint64_t>(i));
    const auto [w, h] = kImageSizes[uniform_int(rng, 0, 3)];
    RgbImage img(w, h);
    std::vector<Rgb888> palette;
    const int colors = uniform_int(rng, 4, 8);
    for (int c = 0; c < colors; ++c) palette.push_back(random_color(rng));
    paint_scene(img, rng, palette, uniform_int(rng, 4, 10));
    add_noise(img, rng, 24, 0.05);
    out.images.push_back(std::move(img));
  }

  // Answer-set sizes and hosts.
  Rng plan = make_rng(cfg.seed, 2, 0);
  std::vector<int> sizes;
  for (int q = 0; q < cfg.queries; ++q) sizes.push_back(uniform_int(plan, cfg.min_answers, cfg.max_answers));
  const int needed = std::accumulate(sizes.begin(), sizes.end(), 0);
  if (needed > cfg.backgrounds) {
    throw InvalidInput("synth: " + std::to_string(cfg.backgrounds) + " backgrounds cannot host " +
                       std::to_string(needed) + " planted queries");
  }
  std::vector<ImageId> hosts(static_cast<std::size_t>(cfg.backgrounds));
  std::iota(hosts.begin(), hosts.end(), ImageId{0});
  std::shuffle(hosts.begin(), hosts.end(), plan);

  std::size_t next_host = 0;
  for (int q = 0; q < cfg.queries; ++q) {
    Rng rng = make_rng(cfg.seed, 3, static_cast<std::uint64_t>(q));
    std::vector<ImageId> answer(hosts.begin() + static_cast<std::ptrdiff_t>(next_host),
                                hosts.begin() + static_cast<std::ptrdiff_t>(next_host + static_cast<std::size_t>(sizes[q])));
    next_host += static_cast<std::size_t>(sizes[q]);

    const RgbImage& first = out.images[answer.front()];
    const double area = cfg.query_area * std::uniform_real_distribution<double>(0.7, 1.3)(rng);
    const int side = std::max(4, static_cast<int>(std::lround(std::sqrt(area * first.width * first.height))));
    const int pw = std::min(side, first.width);
    const int ph = std::min(side, first.height);

    RgbImage pattern(pw, ph);
    std::vector<Rgb888> palette;
    const int colors = uniform_int(rng, 3, 5);
    for (int c = 0; c < colors; ++c) palette.push_back(random_color(rng));
    paint_scene(pattern, rng, palette, uniform_int(rng, 3, 6));
    RgbImage backdrop(128, 128);
    paint_scene(backdrop, rng, palette, uniform_int(rng, 3, 6));

    for (ImageId host : answer) {
      RgbImage& img = out.images[host];
      if (std::bernoulli_distribution(cfg.theme)(rng)) {
        img = resize_nearest(backdrop, img.width, img.height);
        std::vector<Rgb888> own;
        for (int c = 0; c < 4; ++c) own.push_back(random_color(rng));
        for (int s = uniform_int(rng, 1, cfg.overlay_shapes); s > 0; --s) {
          const int w = uniform_int(rng, img.width / 8, img.width / 3), h = uniform_int(rng, img.height / 8, img.height / 3);
          const int x = uniform_int(rng, 0, img.width - w), y = uniform_int(rng, 0, img.height - h);
          fill_ellipse(img, x + w / 2, y + h / 2, w / 2, h / 2, own[static_cast<std::size_t>(uniform_int(rng, 0, 3))]);
        }
        add_noise(img, rng, 24, 0.05);
      }
      const bool original = host == answer.front();
      RgbImage instance = pattern;
      if (!original) {
        if (std::bernoulli_distribution(cfg.repaint)(rng)) paint_scene(instance, rng, palette, uniform_int(rng, 3, 6));
        instance = perturb(instance, rng, cfg, img.width, img.height);
      }
      const int x = uniform_int(rng, 0, img.width - instance.width);
      const int y = uniform_int(rng, 0, img.height - instance.height);
      paste(img, instance, x, y);
      if (original) out.query_origin.push_back(PixelRect{x, y, x + pw, y + ph});
    }
    out.queries.push_back(std::move(pattern));
    out.answers.push_back(std::move(answer));
  }
  return out;
}

inline std::string synth_image_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "img_%05zu.ppm", i);
  return buf;
}

inline std::string synth_query_name(std::size_t q) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "q_%03zu.ppm", q);
  return buf;
}

/// Writes images/, queries/ and answers.json ({queryFile: [imageIds]}).
inline void write_synthetic_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "queries");
  for (std::size_t i = 0; i < corpus.images.size(); ++i)
    write_ppm(corpus.images[i], (dir / "images" / synth_image_name(i)).string());
  nlohmann::ordered_json answers = nlohmann::ordered_json::object();
  for (std::size_t q = 0; q < corpus.queries.size(); ++q) {
    write_ppm(corpus.queries[q], (dir / "queries" / synth_query_name(q)).string());
    answers[synth_query_name(q)] = corpus.answers[q];
  }
  std::ofstream out(dir / "answers.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "answers.json").string());
  out << answers.dump(2) << '\n';
}

}  // namespace cbsir
