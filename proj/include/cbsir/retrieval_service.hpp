#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "cbsir/errors.hpp"
#include "cbsir/feedback_engine.hpp"
#include "cbsir/image_io.hpp"
#include "cbsir/index_store.hpp"
#include "cbsir/tiling.hpp"

namespace cbsir {

/// Feedback submitted after the session's last allowed iteration.
class IterationLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ServiceConfig {
  std::size_t page_size = 20;
  std::chrono::seconds session_timeout{30 * 60};
  // Iterations per session, counting the initial ranking.
  int max_iterations = 10;
};

struct PageEntry {
  ImageId id = 0;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based

  friend bool operator==(const PageEntry&, const PageEntry&) = default;
};

struct ResultPage {
  std::string session_id;
  int iteration = 1;
  std::vector<PageEntry> results;
};

/**
 * In-memory session store around the feedback loop. The loaded index is
 * shared read-only; every mutation is confined to one session, and requests
 * on the same session are serialized by that session's mutex.
 */
class RetrievalService {
 public:
  using Clock = std::chrono::steady_clock;

  RetrievalService(std::shared_ptr<const LoadedIndex> index, ServiceConfig config = {})
      : index_(std::move(index)), config_(config), rng_(std::random_device{}()) {
    if (!index_) throw InvalidInput("RetrievalService needs an index");
    if (config_.page_size == 0) throw InvalidInput("page size must be at least 1");
    if (index_->corpus.empty()) throw InvalidInput("index holds no images");
  }

  const LoadedIndex& index() const noexcept { return *index_; }
  const ServiceConfig& config() const noexcept { return config_; }

  ResultPage create_session(std::span<const std::uint8_t> image_bytes) { return create_session(decode_image(image_bytes)); }

  ResultPage create_session(const RgbImage& query) {
    evict_idle(Clock::now());
    auto session = std::make_shared<Session>();
    auto [ranking, state] =
        start_session(build_query_signature(query, index_->corpus.palette()), index_->corpus, config_.page_size);
    session->state = std::move(state);
    session->last_used = Clock::now();

    std::string id;
    {
      std::lock_guard lock(map_mu_);
      do {
        id = new_session_id();
      } while (sessions_.count(id));
      sessions_.emplace(id, session);
    }
    return make_page(id, session->state.iteration, ranking);
  }

  ResultPage submit_feedback(const std::string& session_id, const FeedbackSet& feedback) {
    auto session = find(session_id);
    std::lock_guard lock(session->mu);
    if (session->ended) throw NotFound("unknown session " + session_id);
    if (session->state.iteration >= config_.max_iterations) {
      throw IterationLimit("session reached the limit of " + std::to_string(config_.max_iterations) + " iterations");
    }
    auto [ranking, state] = run_iteration(session->state, feedback, index_->corpus);
    session->state = std::move(state);
    session->last_used = Clock::now();
    return make_page(session_id, session->state.iteration, ranking);
  }

  void end_session(const std::string& session_id) {
    std::shared_ptr<Session> session;
    {
      std::lock_guard lock(map_mu_);
      const auto it = sessions_.find(session_id);
      if (it == sessions_.end()) throw NotFound("unknown session " + session_id);
      session = it->second;
      sessions_.erase(it);
    }
    std::lock_guard lock(session->mu);
    session->ended = true;
  }

  /// Drops sessions idle for longer than the configured timeout.
  std::size_t evict_idle(Clock::time_point now) {
    std::lock_guard lock(map_mu_);
    std::size_t evicted = 0;
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      std::unique_lock session_lock(it->second->mu, std::try_to_lock);
      if (session_lock.owns_lock() && now - it->second->last_used > config_.session_timeout) {
        it->second->ended = true;
        it = sessions_.erase(it);
        ++evicted;
      } else {
        ++it;
      }
    }
    return evicted;
  }

  std::size_t session_count() const {
    std::lock_guard lock(map_mu_);
    return sessions_.size();
  }

  /// Snapshot of a session's state, for inspection.
  SessionState session_state(const std::string& session_id) const {
    auto session = find(session_id);
    std::lock_guard lock(session->mu);
    return session->state;
  }

 private:
  struct Session {
    std::mutex mu;
    SessionState state;
    Clock::time_point last_used;
    bool ended = false;
  };

  std::shared_ptr<Session> find(const std::string& session_id) const {
    std::lock_guard lock(map_mu_);
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw NotFound("unknown session " + session_id);
    return it->second;
  }

  // Caller holds map_mu_.
  std::string new_session_id() {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string id;
    for (int i = 0; i < 2; ++i) {
      std::uint64_t v = rng_();
      for (int n = 0; n < 16; ++n, v >>= 4) id.push_back(kHex[v & 0xF]);
    }
    return id;
  }

  ResultPage make_page(const std::string& id, int iteration, const Ranking& ranking) const {
    ResultPage page{id, iteration, {}};
    const std::size_t n = std::min(config_.page_size, ranking.size());
    for (std::size_t i = 0; i < n; ++i) page.results.push_back({ranking[i].id, ranking[i].score, i + 1});
    return page;
  }

  std::shared_ptr<const LoadedIndex> index_;
  ServiceConfig config_;
  mutable std::mutex map_mu_;
  std::unordered_map<std::string, std::shared_ptr<Session>> sessions_;
  std::mt19937_64 rng_;
};

}  // namespace cbsir
