#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "cbsir/errors.hpp"
#include "cbsir/evaluation.hpp"
#include "cbsir/feedback_engine.hpp"
#include "cbsir/image_io.hpp"
#include "cbsir/index_store.hpp"
#include "cbsir/synth.hpp"
#include "cbsir/tiling.hpp"

// Operator commands behind the `cbsir` tool. Each takes its streams
// explicitly so the tool's behaviour can be exercised in-process.

namespace cbsir {

namespace fs = std::filesystem;

inline std::string format_double(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---------------------------------------------------------------------------
// index
// ---------------------------------------------------------------------------

struct IndexReport {
  std::size_t indexed = 0;
  std::vector<std::string> skipped;
  std::size_t file_bytes = 0;
};

inline std::vector<fs::path> list_files_sorted(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw NotFound("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

/**
 * Extracts signatures for every decodable image in `dataset` (sorted path
 * order defines image ids) and writes the index. Undecodable files are
 * logged and skipped.
 */
inline IndexReport cmd_index(const fs::path& dataset, Palette palette, const fs::path& out_path, std::ostream& log,
                             unsigned workers = std::max(1u, std::thread::hardware_concurrency())) {
  const auto files = list_files_sorted(dataset);
  if (files.empty()) throw InvalidInput("dataset directory is empty: " + dataset.string());

  struct Extracted {
    std::optional<ImageSignature> sig;
    std::uint32_t width = 0, height = 0;
    double seconds = 0.0;
    std::string error;
  };
  std::vector<Extracted> results(files.size());
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < files.size(); i += stride) {
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const RgbImage img = read_image(files[i].string());
        results[i].sig = build_image_signature(img, palette);
        results[i].width = static_cast<std::uint32_t>(img.width);
        results[i].height = static_cast<std::uint32_t>(img.height);
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
      results[i].seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  std::vector<std::future<void>> jobs;
  for (unsigned w = 0; w < workers; ++w) jobs.push_back(std::async(std::launch::async, work, w, workers));
  for (auto& j : jobs) j.get();

  IndexReport report;
  std::vector<ImageSignature> sigs;
  std::vector<CatalogEntry> catalog;
  for (std::size_t i = 0; i < files.size(); ++i) {
    auto& r = results[i];
    if (!r.sig) {
      log << "skip " << files[i].string() << ": " << r.error << '\n';
      report.skipped.push_back(files[i].string());
      continue;
    }
    const auto id = static_cast<ImageId>(sigs.size());
    r.sig->id = id;
    sigs.push_back(std::move(*r.sig));
    catalog.push_back({id, fs::absolute(files[i]).lexically_normal().string(), r.width, r.height});
    log << "image " << id << ' ' << files[i].filename().string() << ' ' << format_double(r.seconds * 1000.0, 2)
        << " ms\n";
  }
  if (sigs.empty()) throw InvalidInput("no decodable images in " + dataset.string());

  write_index(sigs, catalog, palette, out_path.string());
  report.indexed = sigs.size();
  report.file_bytes = static_cast<std::size_t>(fs::file_size(out_path));
  log << "indexed " << report.indexed << " images, skipped " << report.skipped.size() << ", index size "
      << report.file_bytes << " bytes (payload " << report.indexed * signature_bytes(palette) << ")\n";
  return report;
}

// ---------------------------------------------------------------------------
// query
// ---------------------------------------------------------------------------

inline void print_ranking(const Ranking& ranking, std::size_t top, std::ostream& out) {
  const std::size_t n = std::min(top, ranking.size());
  for (std::size_t i = 0; i < n; ++i)
    out << (i + 1) << '\t' << ranking[i].id << '\t' << format_double(ranking[i].score) << '\n';
}

/// Parses "+3 -7 +12"; throws InvalidInput on malformed tokens.
inline FeedbackSet parse_feedback_line(const std::string& line) {
  FeedbackSet fb;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) {
    if (tok.size() < 2 || (tok[0] != '+' && tok[0] != '-') ||
        tok.find_first_not_of("0123456789", 1) != std::string::npos) {
      throw InvalidInput("expected +id or -id, got '" + tok + "'");
    }
    const auto id = static_cast<ImageId>(std::stoul(tok.substr(1)));
    (tok[0] == '+' ? fb.positives : fb.negatives).push_back(id);
  }
  return fb;
}

/**
 * Ranks the corpus against a query. In interactive mode, reads feedback
 * lines ("+id -id ...", "q" to stop) and re-ranks after each, up to
 * `max_iterations` iterations.
 */
inline int cmd_query(const LoadedIndex& index, const RgbImage& query, std::size_t top, bool interactive,
                     std::istream& in, std::ostream& out, std::ostream& err, int max_iterations = 10) {
  auto [ranking, state] = start_session(build_query_signature(query, index.corpus.palette()), index.corpus, top);
  out << "iteration " << state.iteration << '\n';
  print_ranking(ranking, top, out);
  if (!interactive) return 0;

  std::string line;
  while (state.iteration < max_iterations) {
    out << "feedback> " << std::flush;
    if (!std::getline(in, line) || line == "q" || line == "quit") break;
    try {
      const FeedbackSet fb = parse_feedback_line(line);
      std::tie(ranking, state) = run_iteration(state, fb, index.corpus);
    } catch (const InvalidInput& e) {
      err << "rejected: " << e.what() << '\n';
      continue;
    }
    out << "iteration " << state.iteration << '\n';
    print_ranking(ranking, top, out);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalSummary {
  std::size_t queries = 0;
  std::vector<std::string> missing;
  double mean_iterations_to_original = 0.0;
  std::vector<MetricsRow> mean_rows;
  std::vector<double> mean_iteration_ms;
};

inline std::string csv_opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

inline const char* kEvalCsvHeader =
    "query,iteration,actual_recall,actual_precision,new_recall,new_precision,cumulative_recall,"
    "cumulative_precision,normalized_precision,original_shown";

/// Unweighted mean of the per-query curves, iteration by iteration.
inline std::vector<MetricsRow> mean_curves(const std::vector<SimulationResult>& runs) {
  std::vector<MetricsRow> mean;
  if (runs.empty()) return mean;
  const std::size_t iters = runs.front().rows.size();
  const double n = static_cast<double>(runs.size());
  for (std::size_t k = 0; k < iters; ++k) {
    MetricsRow m;
    m.iteration = static_cast<int>(k + 1);
    double nr = 0, np = 0;
    for (const auto& r : runs) {
      const auto& row = r.rows[k];
      m.actual_recall += row.actual_recall / n;
      m.actual_precision += row.actual_precision / n;
      m.cumulative_recall += row.cumulative_recall / n;
      m.cumulative_precision += row.cumulative_precision / n;
      m.normalized_precision += row.normalized_precision / n;
      nr += row.new_recall.value_or(0.0) / n;
      np += row.new_precision.value_or(0.0) / n;
    }
    if (k > 0) {
      m.new_recall = nr;
      m.new_precision = np;
    }
    mean.push_back(m);
  }
  return mean;
}

/**
 * Simulated-user benchmark. Writes per-query rows to `report` and the mean
 * curves plus per-iteration wall-clock to `<report>.summary.csv`. The first
 * id of each answer list is taken as the query's original image.
 */
inline EvalSummary cmd_eval(const LoadedIndex& index, const fs::path& queries_dir, const fs::path& answers_file,
                            int iterations, std::size_t top, const fs::path& report, std::ostream& log) {
  std::ifstream ain(answers_file);
  if (!ain) throw NotFound("cannot open " + answers_file.string());
  const auto answers = nlohmann::json::parse(ain);
  if (!answers.is_object()) throw InvalidInput("answers file must map query file names to id lists");

  EvalSummary summary;
  std::vector<std::pair<std::string, std::vector<ImageId>>> cases;
  for (const auto& [name, ids] : answers.items()) {
    if (!fs::exists(queries_dir / name)) {
      summary.missing.push_back(name);
      continue;
    }
    auto list = ids.get<std::vector<ImageId>>();
    if (list.empty()) {
      summary.missing.push_back(name);
      continue;
    }
    cases.emplace_back(name, std::move(list));
  }
  if (fs::is_directory(queries_dir)) {
    for (const auto& f : list_files_sorted(queries_dir))
      if (!answers.contains(f.filename().string())) summary.missing.push_back(f.filename().string());
  }
  std::sort(cases.begin(), cases.end());
  for (const auto& m : summary.missing) log << "no ground truth or query file for " << m << '\n';

  std::vector<SimulationResult> runs;
  std::ofstream csv(report);
  if (!csv) throw std::runtime_error("cannot write " + report.string());
  csv << kEvalCsvHeader << '\n';
  double iter_sum = 0.0;
  for (const auto& [name, ids] : cases) {
    const RgbImage img = read_image((queries_dir / name).string());
    const QuerySignature q = build_query_signature(img, index.corpus.palette());
    SimulationResult run = simulate_session(q, ids, ids.front(), index.corpus, iterations, top);
    for (std::size_t k = 0; k < run.rows.size(); ++k) {
      const auto& row = run.rows[k];
      const bool shown = std::find(run.shown[k].begin(), run.shown[k].end(), ids.front()) != run.shown[k].end();
      csv << name << ',' << row.iteration << ',' << format_double(row.actual_recall) << ','
          << format_double(row.actual_precision) << ',' << csv_opt(row.new_recall) << ',' << csv_opt(row.new_precision)
          << ',' << format_double(row.cumulative_recall) << ',' << format_double(row.cumulative_precision) << ','
          << format_double(row.normalized_precision) << ',' << (shown ? 1 : 0) << '\n';
    }
    iter_sum += iterations_to_original(run, iterations);
    log << name << ": original at iteration "
        << (run.original_found_at ? std::to_string(*run.original_found_at) : std::string("never")) << ", recall "
        << format_double(run.rows.front().actual_recall, 3) << " -> " << format_double(run.rows.back().actual_recall, 3)
        << '\n';
    runs.push_back(std::move(run));
  }

  summary.queries = runs.size();
  summary.mean_rows = mean_curves(runs);
  if (!runs.empty()) {
    summary.mean_iterations_to_original = iter_sum / static_cast<double>(runs.size());
    summary.mean_iteration_ms.assign(static_cast<std::size_t>(iterations), 0.0);
    for (const auto& r : runs)
      for (std::size_t k = 0; k < r.iteration_ms.size(); ++k)
        summary.mean_iteration_ms[k] += r.iteration_ms[k] / static_cast<double>(runs.size());
  }

  std::ofstream sum(report.string() + ".summary.csv");
  if (!sum) throw std::runtime_error("cannot write summary for " + report.string());
  sum << "iteration,actual_recall,actual_precision,new_recall,new_precision,cumulative_recall,cumulative_precision,"
         "normalized_precision,mean_ms\n";
  for (std::size_t k = 0; k < summary.mean_rows.size(); ++k) {
    const auto& m = summary.mean_rows[k];
    sum << m.iteration << ',' << format_double(m.actual_recall) << ',' << format_double(m.actual_precision) << ','
        << csv_opt(m.new_recall) << ',' << csv_opt(m.new_precision) << ',' << format_double(m.cumulative_recall) << ','
        << format_double(m.cumulative_precision) << ',' << format_double(m.normalized_precision) << ','
        << format_double(summary.mean_iteration_ms[k], 3) << '\n';
  }

  log << "queries evaluated: " << summary.queries << ", missing: " << summary.missing.size() << '\n';
  log << "mean iterations to original in top " << top << ": " << format_double(summary.mean_iterations_to_original, 2)
      << '\n';
  for (std::size_t k = 0; k < summary.mean_rows.size(); ++k) {
    log << "iteration " << (k + 1) << ": actual recall " << format_double(summary.mean_rows[k].actual_recall, 3)
        << ", cumulative recall " << format_double(summary.mean_rows[k].cumulative_recall, 3) << ", "
        << format_double(summary.mean_iteration_ms[k], 1) << " ms\n";
  }
  return summary;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

inline SynthCorpus cmd_synth(const fs::path& out_dir, const SynthConfig& cfg, std::ostream& log) {
  SynthCorpus corpus = generate_synthetic_corpus(cfg);
  write_synthetic_corpus(corpus, out_dir);
  std::size_t answers = 0, largest = 0;
  for (const auto& a : corpus.answers) {
    answers += a.size();
    largest = std::max(largest, a.size());
  }
  log << "wrote " << corpus.images.size() << " images and " << corpus.queries.size() << " queries to "
      << out_dir.string() << '\n';
  if (!corpus.answers.empty()) {
    log << "answer sets: mean " << format_double(static_cast<double>(answers) / corpus.answers.size(), 2) << ", max "
        << largest << '\n';
  }
  return corpus;
}

}  // namespace cbsir
