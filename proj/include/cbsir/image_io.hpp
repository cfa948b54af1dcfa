#pragma once

#include <cctype>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "cbsir/color_features.hpp"
#include "cbsir/errors.hpp"

#ifdef CBSIR_HAS_OPENCV
#include <opencv2/imgcodecs.hpp>
#endif

// Image decoding lives at the tool/service boundary. Netpbm (P2, P3, P5, P6)
// is decoded natively; anything else goes through OpenCV when built with it.

namespace cbsir {

namespace detail {

class PnmTokenizer {
 public:
  explicit PnmTokenizer(std::span<const std::uint8_t> data) : data_(data) {}

  unsigned next_uint() {
    skip_space_and_comments();
    if (pos_ >= data_.size() || !std::isdigit(data_[pos_])) throw InvalidInput("malformed PNM header");
    unsigned long v = 0;
    while (pos_ < data_.size() && std::isdigit(data_[pos_])) {
      v = v * 10 + (data_[pos_++] - '0');
      if (v > 1u << 20) throw InvalidInput("PNM value too large");
    }
    return static_cast<unsigned>(v);
  }

  // Raster starts after exactly one whitespace byte following maxval.
  std::span<const std::uint8_t> raster() {
    if (pos_ >= data_.size()) throw InvalidInput("PNM raster missing");
    return data_.subspan(pos_ + 1);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < data_.size()) {
      if (data_[pos_] == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else if (std::isspace(data_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

inline bool is_pnm(std::span<const std::uint8_t> data) {
  return data.size() >= 2 && data[0] == 'P' && (data[1] == '2' || data[1] == '3' || data[1] == '5' || data[1] == '6');
}

inline RgbImage decode_pnm(std::span<const std::uint8_t> data) {
  const char kind = static_cast<char>(data[1]);
  PnmTokenizer tok(data.subspan(2));
  const unsigned w = tok.next_uint();
  const unsigned h = tok.next_uint();
  const unsigned maxval = tok.next_uint();
  if (w == 0 || h == 0) throw InvalidInput("PNM image has zero size");
  if (maxval == 0 || maxval > 255) throw InvalidInput("only 8-bit PNM images are supported");

  const bool color = kind == '3' || kind == '6';
  const std::size_t count = static_cast<std::size_t>(w) * h;
  RgbImage img(static_cast<int>(w), static_cast<int>(h));
  auto scale = [maxval](unsigned v) { return static_cast<std::uint8_t>(v * 255u / maxval); };

  if (kind == '5' || kind == '6') {
    const auto raster = tok.raster();
    const std::size_t need = count * (color ? 3 : 1);
    if (raster.size() < need) throw InvalidInput("truncated PNM raster");
    for (std::size_t i = 0; i < count; ++i) {
      if (color) {
        img.pixels[i] = {scale(raster[3 * i]), scale(raster[3 * i + 1]), scale(raster[3 * i + 2])};
      } else {
        const auto v = scale(raster[i]);
        img.pixels[i] = {v, v, v};
      }
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      if (color) {
        const unsigned r = tok.next_uint(), g = tok.next_uint(), b = tok.next_uint();
        img.pixels[i] = {scale(r), scale(g), scale(b)};
      } else {
        const auto v = scale(tok.next_uint());
        img.pixels[i] = {v, v, v};
      }
    }
  }
  return img;
}

}  // namespace detail

/// Decodes an in-memory image. Throws InvalidInput when undecodable.
inline RgbImage decode_image(std::span<const std::uint8_t> data) {
  if (data.empty()) throw InvalidInput("empty image data");
  if (detail::is_pnm(data)) return detail::decode_pnm(data);
#ifdef CBSIR_HAS_OPENCV
  const cv::Mat buf(1, static_cast<int>(data.size()), CV_8UC1, const_cast<std::uint8_t*>(data.data()));
  const cv::Mat bgr = cv::imdecode(buf, cv::IMREAD_COLOR);
  if (!bgr.empty()) {
    RgbImage img(bgr.cols, bgr.rows);
    for (int y = 0; y < bgr.rows; ++y) {
      const auto* row = bgr.ptr<cv::Vec3b>(y);
      for (int x = 0; x < bgr.cols; ++x) img.at(x, y) = {row[x][2], row[x][1], row[x][0]};
    }
    return img;
  }
#endif
  throw InvalidInput("unsupported or undecodable image format");
}

inline RgbImage read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open " + path);
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_image(bytes);
}

inline std::vector<std::uint8_t> encode_ppm(const RgbImage& img) {
  const std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.pixels.size() * 3);
  for (const auto& p : img.pixels) {
    out.push_back(p.r);
    out.push_back(p.g);
    out.push_back(p.b);
  }
  return out;
}

inline void write_ppm(const RgbImage& img, const std::string& path) {
  const auto bytes = encode_ppm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

/// Pixel copy of a sub-rectangle.
inline RgbImage crop(const RgbImage& img, const PixelRect& r) {
  if (r.area() == 0 || r.x0 < 0 || r.y0 < 0 || r.x1 > img.width || r.y1 > img.height) {
    throw InvalidInput("crop rectangle outside the image");
  }
  RgbImage out(r.width(), r.height());
  for (int y = 0; y < r.height(); ++y)
    for (int x = 0; x < r.width(); ++x) out.at(x, y) = img.at(r.x0 + x, r.y0 + y);
  return out;
}

}  // namespace cbsir
