#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cbsir/bic_histogram.hpp"
#include "cbsir/errors.hpp"
#include "cbsir/feedback_engine.hpp"
#include "cbsir/tiling.hpp"

// On-disk index layout (all integers little-endian), see FORMAT.md:
//
//   header   24 bytes   magic "CBSIRIDX", u16 version, u16 colors, u32 flags, u64 count
//   catalog  per image  u32 width, u32 height, u32 path length, path bytes (UTF-8)
//   payload  per image  16 leaves x 2M bins x 4 bits = 16 * M bytes
//
// Payload nibbles: two bins per byte, low nibble first; leaves row-major,
// border bins before interior bins within a leaf.

namespace cbsir {

inline constexpr std::array<char, 8> kIndexMagic = {'C', 'B', 'S', 'I', 'R', 'I', 'D', 'X'};
inline constexpr std::uint16_t kIndexVersion = 1;
inline constexpr std::size_t kIndexHeaderSize = 24;

struct IndexHeader {
  std::uint16_t version = kIndexVersion;
  Palette palette = Palette::Colors64;
  std::uint32_t flags = 0;
  std::uint64_t image_count = 0;
};

struct CatalogEntry {
  ImageId id = 0;
  std::string path;
  std::uint32_t width = 0;
  std::uint32_t height = 0;

  friend bool operator==(const CatalogEntry&, const CatalogEntry&) = default;
};

struct LoadedIndex {
  IndexHeader header;
  std::vector<CatalogEntry> catalog;
  Corpus corpus;
};

/// Payload bytes per image.
constexpr std::size_t signature_bytes(Palette p) noexcept { return kLeafCount * color_count(p); }

inline std::size_t catalog_bytes(const std::vector<CatalogEntry>& catalog) {
  std::size_t n = 0;
  for (const auto& e : catalog) n += 12 + e.path.size();
  return n;
}

namespace detail {

template <class T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    if (remaining() < n) throw IndexFormatError(std::string("truncated ") + what, pos_);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  template <class T>
  T get_le(const char* what) {
    const auto s = take(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(s[i]) << (8 * i));
    return v;
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline void pack_signature(const ImageSignature& sig, std::vector<std::uint8_t>& out) {
  for (const auto& leaf : sig.leaves) {
    const auto bins = leaf.bins();
    for (std::size_t i = 0; i < bins.size(); i += 2) {
      out.push_back(static_cast<std::uint8_t>(bins[i] | (bins[i + 1] << 4)));
    }
  }
}

inline std::vector<std::uint8_t> encode_index(std::span<const ImageSignature> signatures,
                                              const std::vector<CatalogEntry>& catalog, Palette palette) {
  if (signatures.size() != catalog.size()) throw InvalidInput("catalog and signature counts differ");
  std::set<std::string_view> paths;
  for (std::size_t i = 0; i < signatures.size(); ++i) {
    if (signatures[i].palette() != palette) throw InvalidInput("signatures do not share one palette size");
    if (catalog[i].id != i || signatures[i].id != i) throw InvalidInput("image ids must be dense 0..N-1");
    if (!paths.insert(catalog[i].path).second) throw InvalidInput("duplicate catalog path: " + catalog[i].path);
  }

  std::vector<std::uint8_t> out;
  out.reserve(kIndexHeaderSize + catalog_bytes(catalog) + signatures.size() * signature_bytes(palette));
  for (char c : kIndexMagic) out.push_back(static_cast<std::uint8_t>(c));
  detail::put_le<std::uint16_t>(out, kIndexVersion);
  detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(palette));
  detail::put_le<std::uint32_t>(out, 0);
  detail::put_le<std::uint64_t>(out, signatures.size());
  for (const auto& e : catalog) {
    detail::put_le<std::uint32_t>(out, e.width);
    detail::put_le<std::uint32_t>(out, e.height);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.path.size()));
    for (char c : e.path) out.push_back(static_cast<std::uint8_t>(c));
  }
  for (const auto& sig : signatures) pack_signature(sig, out);
  return out;
}

inline LoadedIndex decode_index(std::span<const std::uint8_t> data) {
  detail::ByteReader in(data);
  LoadedIndex index;

  const auto magic = in.take(kIndexMagic.size(), "header");
  if (!std::equal(magic.begin(), magic.end(), kIndexMagic.begin())) throw IndexFormatError("bad magic", 0);
  const std::size_t version_at = in.offset();
  index.header.version = in.get_le<std::uint16_t>("header");
  if (index.header.version != kIndexVersion) {
    throw IndexFormatError("unsupported index version " + std::to_string(index.header.version), version_at);
  }
  const std::size_t colors_at = in.offset();
  const auto colors = in.get_le<std::uint16_t>("header");
  if (colors != 16 && colors != 64) throw IndexFormatError("palette size must be 16 or 64", colors_at);
  index.header.palette = palette_from_colors(colors);
  index.header.flags = in.get_le<std::uint32_t>("header");
  index.header.image_count = in.get_le<std::uint64_t>("header");

  const std::uint64_t n = index.header.image_count;
  if (n > in.remaining()) throw IndexFormatError("image count exceeds file size", in.offset());
  index.catalog.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    CatalogEntry e;
    e.id = static_cast<ImageId>(i);
    e.width = in.get_le<std::uint32_t>("catalog entry");
    e.height = in.get_le<std::uint32_t>("catalog entry");
    const auto len = in.get_le<std::uint32_t>("catalog entry");
    const auto path = in.take(len, "catalog path");
    e.path.assign(path.begin(), path.end());
    index.catalog.push_back(std::move(e));
  }

  const Palette palette = index.header.palette;
  const std::size_t bins = 2 * color_count(palette);
  std::vector<ImageSignature> sigs;
  sigs.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    ImageSignature sig{static_cast<ImageId>(i), {}};
    for (auto& leaf : sig.leaves) {
      const std::size_t leaf_at = in.offset();
      const auto packed = in.take(bins / 2, "payload");
      std::vector<std::uint8_t> values(bins);
      for (std::size_t b = 0; b < packed.size(); ++b) {
        values[2 * b] = packed[b] & 0x0F;
        values[2 * b + 1] = packed[b] >> 4;
        if (values[2 * b] > kMaxBinValue || values[2 * b + 1] > kMaxBinValue) {
          throw IndexFormatError("histogram bin outside [0, 9]", leaf_at + b);
        }
      }
      leaf = BicHistogram(palette, std::move(values));
    }
    sigs.push_back(std::move(sig));
  }
  if (in.remaining() != 0) throw IndexFormatError("trailing bytes after payload", in.offset());
  index.corpus = Corpus(palette, std::move(sigs));
  return index;
}

inline void write_index(std::span<const ImageSignature> signatures, const std::vector<CatalogEntry>& catalog,
                        Palette palette, const std::string& path) {
  const auto bytes = encode_index(signatures, catalog, palette);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline LoadedIndex load_index(const std::string& path) { return decode_index(read_file_bytes(path)); }

}  // namespace cbsir
