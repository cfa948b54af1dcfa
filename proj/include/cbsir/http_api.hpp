#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "cbsir/errors.hpp"
#include "cbsir/retrieval_service.hpp"

// HTTP+JSON front of RetrievalService:
//
//   POST   /sessions                multipart field "image" (or a raw image body)
//   POST   /sessions/{id}/feedback  {"positives": [...], "negatives": [...]}
//   DELETE /sessions/{id}
//   GET    /images/{id}             original image bytes from the catalog
//   GET    /healthz

namespace cbsir {

using json = nlohmann::json;

inline json page_to_json(const ResultPage& page) {
  json results = json::array();
  for (const auto& e : page.results) {
    results.push_back({{"imageId", e.id}, {"score", e.score}, {"rank", e.rank}, {"url", "/images/" + std::to_string(e.id)}});
  }
  return {{"sessionId", page.session_id}, {"iteration", page.iteration}, {"results", std::move(results)}};
}

inline std::string content_type_for(const std::string& path) {
  auto ext = std::filesystem::path(path).extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".png") return "image/png";
  if (ext == ".ppm" || ext == ".pnm" || ext == ".pgm") return "image/x-portable-anymap";
  if (ext == ".bmp") return "image/bmp";
  return "application/octet-stream";
}

namespace detail {

inline void send_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", message}}.dump(), "application/json");
}

// Maps service exceptions onto status codes.
inline void guarded(httplib::Response& res, const std::function<void()>& body) {
  try {
    body();
  } catch (const NotFound& e) {
    send_error(res, 404, e.what());
  } catch (const IterationLimit& e) {
    send_error(res, 409, e.what());
  } catch (const InvalidInput& e) {
    send_error(res, 400, e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, std::string("malformed JSON: ") + e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

inline std::vector<ImageId> id_list(const json& body, const char* key) {
  std::vector<ImageId> ids;
  if (!body.contains(key)) return ids;
  const auto& arr = body.at(key);
  if (!arr.is_array()) throw InvalidInput(std::string("'") + key + "' must be an array of image ids");
  for (const auto& v : arr) {
    if (!v.is_number_integer() || v.get<long long>() < 0) throw InvalidInput(std::string("'") + key + "' holds a non-id value");
    ids.push_back(v.get<ImageId>());
  }
  return ids;
}

}  // namespace detail

inline void mount_routes(httplib::Server& server, RetrievalService& service) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"}});

  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Get("/healthz", [&service](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"status", "ok"},
                         {"images", service.index().corpus.size()},
                         {"colors", color_count(service.index().corpus.palette())}}
                        .dump(),
                    "application/json");
  });

  server.Post("/sessions", [&service](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(res, [&] {
      std::string bytes;
      if (req.is_multipart_form_data()) {
        if (req.has_file("image")) {
          bytes = req.get_file_value("image").content;
        } else if (!req.files.empty()) {
          bytes = req.files.begin()->second.content;
        }
      } else {
        bytes = req.body;
      }
      if (bytes.empty()) throw InvalidInput("request carries no query image");
      const auto* data = reinterpret_cast<const std::uint8_t*>(bytes.data());
      const ResultPage page = service.create_session(std::span<const std::uint8_t>(data, bytes.size()));
      res.status = 201;
      res.set_content(page_to_json(page).dump(), "application/json");
    });
  });

  server.Post("/sessions/:id/feedback", [&service](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(res, [&] {
      const json body = req.body.empty() ? json::object() : json::parse(req.body);
      if (!body.is_object()) throw InvalidInput("feedback body must be a JSON object");
      FeedbackSet feedback{detail::id_list(body, "positives"), detail::id_list(body, "negatives")};
      const ResultPage page = service.submit_feedback(req.path_params.at("id"), feedback);
      res.set_content(page_to_json(page).dump(), "application/json");
    });
  });

  server.Delete("/sessions/:id", [&service](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(res, [&] {
      service.end_session(req.path_params.at("id"));
      res.status = 204;
    });
  });

  server.Get("/images/:id", [&service](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(res, [&] {
      const std::string& raw = req.path_params.at("id");
      if (raw.empty() || raw.find_first_not_of("0123456789") != std::string::npos || raw.size() > 9) {
        throw InvalidInput("image id must be a non-negative integer");
      }
      const auto id = static_cast<std::size_t>(std::stoul(raw));
      const auto& catalog = service.index().catalog;
      if (id >= catalog.size()) throw NotFound("no image with id " + raw);
      const auto bytes = read_file_bytes(catalog[id].path);
      res.set_content(std::string(bytes.begin(), bytes.end()), content_type_for(catalog[id].path));
    });
  });
}

}  // namespace cbsir
