#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "cbsir/index_store.hpp"
#include "oracles.hpp"

using namespace cbsir;

namespace {

struct Fixture {
  std::vector<ImageSignature> sigs;
  std::vector<CatalogEntry> catalog;
};

Fixture make(std::mt19937_64& rng, std::size_t n, Palette p) {
  Fixture f;
  for (std::size_t i = 0; i < n; ++i) {
    ImageSignature s{static_cast<ImageId>(i), {}};
    for (auto& leaf : s.leaves) leaf = oracle::random_histogram(rng, p);
    f.sigs.push_back(s);
    f.catalog.push_back({static_cast<ImageId>(i), "/data/img_" + std::to_string(i) + ".ppm",
                         static_cast<std::uint32_t>(100 + i), static_cast<std::uint32_t>(80 + 2 * i)});
  }
  return f;
}

std::size_t payload_offset(const std::vector<CatalogEntry>& catalog) { return kIndexHeaderSize + catalog_bytes(catalog); }

template <class F>
std::size_t error_offset(F&& f) {
  try {
    f();
  } catch (const IndexFormatError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "no IndexFormatError";
  return ~std::size_t{0};
}

}  // namespace

TEST(IndexStore, RoundTripBothPalettes) {
  std::mt19937_64 rng(1);
  for (const Palette p : {Palette::Colors16, Palette::Colors64}) {
    const auto f = make(rng, 3, p);
    const auto bytes = encode_index(f.sigs, f.catalog, p);
    const auto loaded = decode_index(bytes);
    EXPECT_EQ(loaded.header.version, 1);
    EXPECT_EQ(loaded.header.palette, p);
    EXPECT_EQ(loaded.header.image_count, 3u);
    EXPECT_EQ(loaded.catalog, f.catalog);
    ASSERT_EQ(loaded.corpus.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(loaded.corpus.images()[i], f.sigs[i]);
    EXPECT_EQ(encode_index(loaded.corpus.images(), loaded.catalog, p), bytes);
  }
}

TEST(IndexStore, SizeFormula) {
  std::mt19937_64 rng(2);
  for (const Palette p : {Palette::Colors16, Palette::Colors64}) {
    for (std::size_t n : {0u, 1u, 7u}) {
      const auto f = make(rng, n, p);
      const auto bytes = encode_index(f.sigs, f.catalog, p);
      EXPECT_EQ(bytes.size(), 24 + catalog_bytes(f.catalog) + n * 16 * color_count(p));
    }
  }
  EXPECT_EQ(signature_bytes(Palette::Colors64), 1024u);
  EXPECT_EQ(signature_bytes(Palette::Colors16), 256u);
}

TEST(IndexStore, EmptyCorpusRoundTrips) {
  const auto bytes = encode_index({}, {}, Palette::Colors16);
  EXPECT_EQ(bytes.size(), 24u);
  const auto loaded = decode_index(bytes);
  EXPECT_EQ(loaded.corpus.size(), 0u);
  EXPECT_EQ(loaded.header.palette, Palette::Colors16);
}

TEST(IndexStore, HeaderBytesAreLittleEndian) {
  std::mt19937_64 rng(3);
  const auto f = make(rng, 2, Palette::Colors16);
  const auto b = encode_index(f.sigs, f.catalog, Palette::Colors16);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 8), "CBSIRIDX");
  EXPECT_EQ(b[8], 1);
  EXPECT_EQ(b[9], 0);
  EXPECT_EQ(b[10], 16);
  EXPECT_EQ(b[11], 0);
  for (int i = 12; i < 16; ++i) EXPECT_EQ(b[i], 0);
  EXPECT_EQ(b[16], 2);
  for (int i = 17; i < 24; ++i) EXPECT_EQ(b[i], 0);
  // first catalog entry: width 100, height 80, path length
  EXPECT_EQ(b[24], 100);
  EXPECT_EQ(b[28], 80);
  EXPECT_EQ(b[32], f.catalog[0].path.size());
}

TEST(IndexStore, PayloadNibblesLowFirst) {
  ImageSignature s{0, {}};
  for (auto& leaf : s.leaves) leaf = BicHistogram(Palette::Colors16);
  s.leaves[0].set_bin(0, 3);
  s.leaves[0].set_bin(1, 7);
  s.leaves[0].set_bin(16, 9);  // first interior bin
  s.leaves[1].set_bin(31, 5);  // last bin of the second leaf
  const std::vector<CatalogEntry> catalog{{0, "a", 4, 4}};
  const auto b = encode_index(std::vector<ImageSignature>{s}, catalog, Palette::Colors16);
  const std::size_t p0 = payload_offset(catalog);
  EXPECT_EQ(b[p0], 0x73);
  EXPECT_EQ(b[p0 + 8], 0x09);
  EXPECT_EQ(b[p0 + 16 + 15], 0x50);
}

TEST(IndexStore, SingleBitFlipChangesExactlyOneBin) {
  std::mt19937_64 rng(4);
  const auto f = make(rng, 3, Palette::Colors64);
  auto bytes = encode_index(f.sigs, f.catalog, Palette::Colors64);
  const std::size_t at = payload_offset(f.catalog) + 1024 + 200;  // image 1, low nibble = flat bin 400
  bytes[at] ^= 0x01;
  const auto loaded = decode_index(bytes);
  int differing = 0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t l = 0; l < 16; ++l)
      for (std::size_t j = 0; j < 128; ++j) {
        const int a = loaded.corpus.images()[i].leaves[l].bins()[j], e = f.sigs[i].leaves[l].bins()[j];
        if (a != e) {
          ++differing;
          EXPECT_EQ(i, 1u);
          EXPECT_EQ(l * 128 + j, 400u);
          EXPECT_EQ(std::abs(a - e), 1);
        }
      }
  EXPECT_EQ(differing, 1);
}

TEST(IndexStore, CorruptionReportsOffsets) {
  std::mt19937_64 rng(5);
  const auto f = make(rng, 2, Palette::Colors16);
  const auto good = encode_index(f.sigs, f.catalog, Palette::Colors16);
  const std::size_t p0 = payload_offset(f.catalog);

  auto bad = good;
  bad[3] = 'X';
  EXPECT_EQ(error_offset([&] { decode_index(bad); }), 0u);

  bad = good;
  bad[8] = 2;
  EXPECT_EQ(error_offset([&] { decode_index(bad); }), 8u);

  bad = good;
  bad[10] = 32;
  EXPECT_EQ(error_offset([&] { decode_index(bad); }), 10u);

  bad = good;
  bad[p0 + 300] = 0xA0;  // high nibble 10
  EXPECT_EQ(error_offset([&] { decode_index(bad); }), p0 + 300);

  bad = good;
  bad.push_back(0);
  EXPECT_EQ(error_offset([&] { decode_index(bad); }), good.size());

  bad.assign(good.begin(), good.end() - 1);
  EXPECT_EQ(error_offset([&] { decode_index(bad); }), p0 + 256 + 15 * 16);

  bad.assign(good.begin(), good.begin() + 20);
  EXPECT_EQ(error_offset([&] { decode_index(bad); }), 16u);

  bad = good;
  bad[23] = 0x10;  // absurd image count
  EXPECT_EQ(error_offset([&] { decode_index(bad); }), 24u);
}

TEST(IndexStore, EncodeRejectsInconsistentInput) {
  std::mt19937_64 rng(6);
  auto f = make(rng, 3, Palette::Colors64);
  EXPECT_THROW(encode_index(f.sigs, f.catalog, Palette::Colors16), InvalidInput);
  auto short_catalog = f.catalog;
  short_catalog.pop_back();
  EXPECT_THROW(encode_index(f.sigs, short_catalog, Palette::Colors64), InvalidInput);
  auto dup = f.catalog;
  dup[2].path = dup[0].path;
  EXPECT_THROW(encode_index(f.sigs, dup, Palette::Colors64), InvalidInput);
  auto sparse = f.sigs;
  sparse[1].id = 9;
  EXPECT_THROW(encode_index(sparse, f.catalog, Palette::Colors64), InvalidInput);
}

TEST(IndexStore, FileRoundTrip) {
  std::mt19937_64 rng(7);
  const auto f = make(rng, 4, Palette::Colors64);
  const auto path = std::filesystem::temp_directory_path() / "cbsir_index_store_test.idx";
  write_index(f.sigs, f.catalog, Palette::Colors64, path.string());
  const auto loaded = load_index(path.string());
  EXPECT_EQ(loaded.catalog, f.catalog);
  EXPECT_EQ(std::filesystem::file_size(path), 24 + catalog_bytes(f.catalog) + 4 * 1024);
  std::filesystem::remove(path);
  EXPECT_THROW(load_index(path.string()), NotFound);
}
