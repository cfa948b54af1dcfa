#pragma once

#include <cstdint>
#include <string>

#include "CLI11.hpp"

// Command-line surface of the `cbsir` tool, shared by main() and the tests.

namespace cbsir::cli {

struct Options {
  // index
  std::string dataset;
  int colors = 64;
  std::string index_out;
  // query / eval / serve
  std::string index_path;
  std::string query_image;
  std::size_t top = 20;
  bool interactive = false;
  // synth
  std::string synth_out;
  int backgrounds = 500;
  int queries = 20;
  std::uint64_t seed = 1;
  // eval
  std::string queries_dir;
  std::string answers;
  int iterations = 10;
  std::string report = "eval.csv";
  // serve
  std::string host = "0.0.0.0";
  int port = 8080;
  std::size_t page_size = 20;
  int session_timeout_s = 1800;
  std::string static_dir;
};

struct Subcommands {
  CLI::App* index = nullptr;
  CLI::App* query = nullptr;
  CLI::App* synth = nullptr;
  CLI::App* eval = nullptr;
  CLI::App* serve = nullptr;
};

inline Subcommands configure(CLI::App& app, Options& o) {
  app.require_subcommand(1);
  Subcommands s;

  s.index = app.add_subcommand("index", "Extract features from a directory of images and write an index");
  s.index->add_option("--dataset", o.dataset, "Directory of images")->required()->check(CLI::ExistingDirectory);
  s.index->add_option("--colors", o.colors, "Quantized colors (16 or 64)")->check(CLI::IsMember({16, 64}));
  s.index->add_option("--out", o.index_out, "Index file to write")->required();

  s.query = app.add_subcommand("query", "Rank the indexed images against a query image");
  s.query->add_option("--index", o.index_path, "Index file")->required()->check(CLI::ExistingFile);
  s.query->add_option("--query", o.query_image, "Query image")->required()->check(CLI::ExistingFile);
  s.query->add_option("--top", o.top, "Results to show")->check(CLI::PositiveNumber);
  s.query->add_flag("--interactive", o.interactive, "Read +id/-id feedback lines from stdin and re-rank");

  s.synth = app.add_subcommand("synth", "Generate a synthetic planted-containment corpus");
  s.synth->add_option("--out", o.synth_out, "Output directory")->required();
  s.synth->add_option("--backgrounds", o.backgrounds, "Database images")->check(CLI::PositiveNumber);
  s.synth->add_option("--queries", o.queries, "Query crops")->check(CLI::NonNegativeNumber);
  s.synth->add_option("--seed", o.seed, "Random seed");

  s.eval = app.add_subcommand("eval", "Simulated-user relevance feedback benchmark");
  s.eval->add_option("--index", o.index_path, "Index file")->required()->check(CLI::ExistingFile);
  s.eval->add_option("--queries", o.queries_dir, "Directory of query images")->required()->check(CLI::ExistingDirectory);
  s.eval->add_option("--answers", o.answers, "Ground truth JSON")->required()->check(CLI::ExistingFile);
  s.eval->add_option("--iterations", o.iterations, "Iterations per session")->check(CLI::PositiveNumber);
  s.eval->add_option("--top", o.top, "Images presented per iteration")->check(CLI::PositiveNumber);
  s.eval->add_option("--report", o.report, "Per-query CSV report");

  s.serve = app.add_subcommand("serve", "Run the HTTP retrieval service");
  s.serve->add_option("--index", o.index_path, "Index file")->required()->envname("CBSIR_INDEX");
  s.serve->add_option("--host", o.host, "Bind address")->envname("CBSIR_HOST");
  s.serve->add_option("--port", o.port, "Port")->envname("CBSIR_PORT")->check(CLI::Range(1, 65535));
  s.serve->add_option("--page-size", o.page_size, "Results per page")->envname("CBSIR_PAGE_SIZE")->check(CLI::PositiveNumber);
  s.serve->add_option("--session-timeout", o.session_timeout_s, "Idle seconds before a session is dropped")
      ->envname("CBSIR_SESSION_TIMEOUT")
      ->check(CLI::PositiveNumber);
  s.serve->add_option("--static", o.static_dir, "Directory served at / (e.g. the built web UI)")->envname("CBSIR_STATIC");
  return s;
}

}  // namespace cbsir::cli
