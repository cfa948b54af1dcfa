#include <gtest/gtest.h>

#include <fstream>

#include "cbsir/commands.hpp"
#include "cli_app.hpp"
#include "test_support.hpp"

using namespace cbsir;
namespace fs = std::filesystem;

namespace {

// Returns the CLI11 exit code (0 on success).
int parse(std::vector<std::string> args, cli::Options& o) {
  CLI::App app;
  cli::configure(app, o);
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return e.get_exit_code();
  }
  return 0;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(CliParse, ColorsMustBe16Or64) {
  support::TempDir dir("parse");
  cli::Options o;
  EXPECT_NE(parse({"index", "--dataset", dir.path().string(), "--colors", "32", "--out", "x.idx"}, o), 0);
  cli::Options ok;
  EXPECT_EQ(parse({"index", "--dataset", dir.path().string(), "--colors", "16", "--out", "x.idx"}, ok), 0);
  EXPECT_EQ(ok.colors, 16);
}

TEST(CliParse, RequiresExactlyOneSubcommand) {
  cli::Options o;
  EXPECT_NE(parse({}, o), 0);
  EXPECT_NE(parse({"query", "--index", "/no/such/file", "--query", "/no/such/q"}, o), 0);
}

TEST(CliParse, ServeDefaults) {
  cli::Options o;
  ASSERT_EQ(parse({"serve", "--index", "i.idx"}, o), 0);
  EXPECT_EQ(o.port, 8080);
  EXPECT_EQ(o.page_size, 20u);
  EXPECT_EQ(o.session_timeout_s, 1800);
}

TEST(IndexCommand, UniformImagesFileSize) {
  support::TempDir dir("uniform");
  fs::create_directories(dir / "images");
  for (int i = 0; i < 10; ++i) {
    RgbImage img(32, 24);
    const auto v = static_cast<std::uint8_t>(i * 25);
    for (auto& p : img.pixels) p = {v, static_cast<std::uint8_t>(255 - v), 128};
    write_ppm(img, (dir / "images" / ("u" + std::to_string(i) + ".ppm")).string());
  }
  std::ofstream(dir / "images" / "broken.ppm") << "not an image";
  for (const Palette p : {Palette::Colors16, Palette::Colors64}) {
    std::ostringstream log;
    const auto out = dir / "index.idx";
    const auto report = cmd_index(dir / "images", p, out, log, 3);
    EXPECT_EQ(report.indexed, 10u);
    ASSERT_EQ(report.skipped.size(), 1u);
    const auto loaded = load_index(out.string());
    EXPECT_EQ(report.file_bytes, 24 + catalog_bytes(loaded.catalog) + 10 * 16 * color_count(p));
    EXPECT_EQ(fs::file_size(out), report.file_bytes);
    EXPECT_EQ(loaded.catalog[0].width, 32u);
    EXPECT_EQ(loaded.catalog[0].height, 24u);
  }
}

TEST(IndexCommand, DeterministicAcrossWorkerCounts) {
  support::TempDir dir("determinism");
  support::write_images(dir / "images", 9, 77);
  std::ostringstream log;
  cmd_index(dir / "images", Palette::Colors64, dir / "a.idx", log, 1);
  cmd_index(dir / "images", Palette::Colors64, dir / "b.idx", log, 4);
  EXPECT_EQ(slurp(dir / "a.idx"), slurp(dir / "b.idx"));
}

TEST(IndexCommand, EmptyDatasetRejected) {
  support::TempDir dir("empty");
  std::ostringstream log;
  EXPECT_THROW(cmd_index(dir.path(), Palette::Colors16, dir / "x.idx", log), InvalidInput);
}

TEST(QueryCommand, PrintsTopK) {
  support::TempDir dir("query");
  const auto index = support::build_index(dir, 8, Palette::Colors64);
  const RgbImage q = read_image(index.catalog[5].path);
  std::istringstream in;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_query(index, q, 3, false, in, out, err), 0);
  const auto l = lines(out.str());
  ASSERT_EQ(l.size(), 4u);
  EXPECT_EQ(l[0], "iteration 1");
  EXPECT_EQ(l[1].rfind("1\t5\t", 0), 0u) << l[1];
  EXPECT_EQ(l[2].rfind("2\t", 0), 0u);
}

TEST(QueryCommand, InteractiveRejectsInvalidFeedback) {
  support::TempDir dir("interactive");
  const auto index = support::build_index(dir, 8, Palette::Colors16);
  const RgbImage q = crop(read_image(index.catalog[2].path), PixelRect{8, 8, 40, 40});
  std::istringstream probe;
  std::ostringstream first, ignored;
  cmd_query(index, q, 3, false, probe, first, ignored);
  const auto shown = lines(first.str());
  const std::string top_id = shown[1].substr(2, shown[1].find('\t', 2) - 2);

  std::istringstream in("+999\nbogus\n+" + top_id + " -" + top_id + "\n+" + top_id + "\nq\n");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_query(index, q, 3, true, in, out, err), 0);
  const auto errors = lines(err.str());
  ASSERT_EQ(errors.size(), 3u);
  for (const auto& e : errors) EXPECT_EQ(e.rfind("rejected: ", 0), 0u) << e;
  EXPECT_NE(out.str().find("iteration 2"), std::string::npos);
  EXPECT_EQ(out.str().find("iteration 3"), std::string::npos);
}

TEST(QueryCommand, InteractiveStopsAtIterationLimit) {
  support::TempDir dir("limit");
  const auto index = support::build_index(dir, 5, Palette::Colors16);
  const RgbImage q = read_image(index.catalog[0].path);
  std::string feed;
  for (int i = 0; i < 20; ++i) feed += "\n";
  std::istringstream in(feed);
  std::ostringstream out, err;
  cmd_query(index, q, 2, true, in, out, err, 4);
  EXPECT_NE(out.str().find("iteration 4"), std::string::npos);
  EXPECT_EQ(out.str().find("iteration 5"), std::string::npos);
}

TEST(ParseFeedbackLine, Tokens) {
  const auto fb = parse_feedback_line("  +3 -7\t+12 ");
  EXPECT_EQ(fb.positives, (std::vector<ImageId>{3, 12}));
  EXPECT_EQ(fb.negatives, (std::vector<ImageId>{7}));
  EXPECT_TRUE(parse_feedback_line("").positives.empty());
  for (const char* bad : {"3", "+", "+x", "-1a", "*4"}) EXPECT_THROW(parse_feedback_line(bad), InvalidInput) << bad;
}

TEST(SynthCommand, DeterministicWithPlantedAnswers) {
  SynthConfig cfg;
  cfg.backgrounds = 40;
  cfg.queries = 3;
  cfg.seed = 11;
  cfg.max_answers = 6;
  const auto a = generate_synthetic_corpus(cfg), b = generate_synthetic_corpus(cfg);
  ASSERT_EQ(a.images.size(), 40u);
  ASSERT_EQ(a.queries.size(), 3u);
  for (std::size_t i = 0; i < a.images.size(); ++i) EXPECT_EQ(a.images[i].pixels, b.images[i].pixels);
  EXPECT_EQ(a.answers, b.answers);

  std::set<ImageId> used;
  for (std::size_t q = 0; q < 3; ++q) {
    EXPECT_GE(a.answers[q].size(), 3u);
    EXPECT_LE(a.answers[q].size(), 6u);
    for (ImageId id : a.answers[q]) EXPECT_TRUE(used.insert(id).second);
    // the query is a verbatim crop of its original
    const RgbImage region = crop(a.images[a.answers[q][0]], a.query_origin[q]);
    EXPECT_EQ(region.pixels, a.queries[q].pixels);
  }
  cfg.queries = 10;
  cfg.max_answers = 19;
  cfg.min_answers = 19;
  EXPECT_THROW(generate_synthetic_corpus(cfg), InvalidInput);
}

TEST(SynthCommand, WritesLayout) {
  support::TempDir dir("synth");
  SynthConfig cfg;
  cfg.backgrounds = 12;
  cfg.queries = 2;
  cfg.max_answers = 4;
  std::ostringstream log;
  const auto corpus = cmd_synth(dir.path(), cfg, log);
  EXPECT_EQ(list_files_sorted(dir / "images").size(), 12u);
  EXPECT_EQ(list_files_sorted(dir / "queries").size(), 2u);
  const auto answers = nlohmann::json::parse(slurp(dir / "answers.json"));
  EXPECT_EQ(answers["q_000.ppm"].get<std::vector<ImageId>>(), corpus.answers[0]);
  EXPECT_EQ(read_image((dir / "queries" / "q_001.ppm").string()).pixels, corpus.queries[1].pixels);
}

TEST(EvalCommand, OneRowPerQueryIterationAndReproducible) {
  support::TempDir dir("eval");
  SynthConfig cfg;
  cfg.backgrounds = 30;
  cfg.queries = 3;
  cfg.max_answers = 5;
  std::ostringstream log;
  cmd_synth(dir.path(), cfg, log);
  cmd_index(dir / "images", Palette::Colors64, dir / "index.idx", log, 2);
  std::ofstream(dir / "queries" / "orphan.ppm") << "x";
  const auto index = load_index((dir / "index.idx").string());

  const auto s1 = cmd_eval(index, dir / "queries", dir / "answers.json", 4, 5, dir / "r1.csv", log);
  const auto s2 = cmd_eval(index, dir / "queries", dir / "answers.json", 4, 5, dir / "r2.csv", log);
  EXPECT_EQ(s1.queries, 3u);
  EXPECT_EQ(s1.missing, (std::vector<std::string>{"orphan.ppm"}));
  const auto rows = lines(slurp(dir / "r1.csv"));
  ASSERT_EQ(rows.size(), 1u + 3u * 4u);
  EXPECT_EQ(rows[0], kEvalCsvHeader);
  EXPECT_EQ(rows[1].rfind("q_000.ppm,1,", 0), 0u);
  EXPECT_EQ(slurp(dir / "r1.csv"), slurp(dir / "r2.csv"));
  EXPECT_EQ(lines(slurp(dir / "r1.csv.summary.csv")).size(), 5u);
  EXPECT_EQ(s1.mean_iterations_to_original, s2.mean_iterations_to_original);
  EXPECT_GE(s1.mean_iterations_to_original, 1.0);
  EXPECT_LE(s1.mean_iterations_to_original, 5.0);
}
