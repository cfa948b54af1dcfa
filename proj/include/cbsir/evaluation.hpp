#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <optional>
#include <tuple>
#include <set>
#include <vector>

#include "cbsir/errors.hpp"
#include "cbsir/feedback_engine.hpp"

namespace cbsir {

/// Retrieval effectiveness at one iteration. The "new" pair is only defined
/// from the second iteration on.
struct MetricsRow {
  int iteration = 1;
  std::optional<double> new_recall;
  std::optional<double> new_precision;
  double actual_recall = 0.0;
  double actual_precision = 0.0;
  double cumulative_recall = 0.0;
  double cumulative_precision = 0.0;
  double normalized_precision = 0.0;
};

/**
 * Metric rows for a sequence of presented pages. `page_size` is the number
 * of images presented per iteration (the precision denominator), even when a
 * page holds fewer images.
 */
inline std::vector<MetricsRow> compute_metrics(const std::vector<std::vector<ImageId>>& shown,
                                               const std::vector<ImageId>& answers, std::size_t page_size) {
  if (answers.empty()) throw InvalidInput("compute_metrics: empty answer set");
  if (page_size == 0) throw InvalidInput("compute_metrics: page size must be positive");
  const std::set<ImageId> answer_set(answers.begin(), answers.end());
  const double n_answers = static_cast<double>(answer_set.size());
  const double k = static_cast<double>(page_size);

  std::vector<MetricsRow> rows;
  std::set<ImageId> found_before;
  for (std::size_t it = 0; it < shown.size(); ++it) {
    std::set<ImageId> relevant;
    for (ImageId id : shown[it])
      if (answer_set.count(id)) relevant.insert(id);
    std::size_t fresh = 0;
    for (ImageId id : relevant) fresh += found_before.count(id) ? 0 : 1;

    MetricsRow row;
    row.iteration = static_cast<int>(it + 1);
    row.actual_recall = static_cast<double>(relevant.size()) / n_answers;
    row.actual_precision = static_cast<double>(relevant.size()) / k;
    if (it > 0) {
      row.new_recall = static_cast<double>(fresh) / n_answers;
      row.new_precision = static_cast<double>(fresh) / k;
    }
    found_before.insert(relevant.begin(), relevant.end());
    row.cumulative_recall = static_cast<double>(found_before.size()) / n_answers;
    row.cumulative_precision = static_cast<double>(found_before.size()) / k;
    // actual precision over the best achievable precision |answers| / k
    row.normalized_precision = row.actual_precision / (n_answers / k);
    rows.push_back(row);
  }
  return rows;
}

struct SimulationResult {
  std::vector<MetricsRow> rows;
  std::vector<std::vector<ImageId>> shown;
  // First iteration (1-based) whose page held the original image.
  std::optional<int> original_found_at;
  std::vector<double> iteration_ms;
};

/**
 * Replays a session with an exact simulated user: every iteration it marks
 * the shown answer-set images positive and the rest of the page negative.
 */
inline SimulationResult simulate_session(const QuerySignature& query, const std::vector<ImageId>& answers,
                                         std::optional<ImageId> original, const Corpus& corpus, int iterations = 10,
                                         std::size_t page_size = 20) {
  if (iterations < 1) throw InvalidInput("simulate_session: need at least one iteration");
  const std::set<ImageId> answer_set(answers.begin(), answers.end());
  using Clock = std::chrono::steady_clock;

  SimulationResult result;
  auto t0 = Clock::now();
  auto [ranking, state] = start_session(query, corpus, page_size);
  result.iteration_ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());

  for (int it = 1;; ++it) {
    const auto& page = state.last_shown();
    result.shown.push_back(page);
    if (original && !result.original_found_at && std::find(page.begin(), page.end(), *original) != page.end()) {
      result.original_found_at = it;
    }
    if (it == iterations) break;

    FeedbackSet feedback;
    for (ImageId id : page) (answer_set.count(id) ? feedback.positives : feedback.negatives).push_back(id);
    t0 = Clock::now();
    std::tie(ranking, state) = run_iteration(std::move(state), feedback, corpus);
    result.iteration_ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
  }
  result.rows = compute_metrics(result.shown, answers, page_size);
  return result;
}

/// Iterations needed to present the original; `iterations + 1` when it never
/// appeared within the session.
inline int iterations_to_original(const SimulationResult& r, int iterations) {
  return r.original_found_at.value_or(iterations + 1);
}

}  // namespace cbsir
