#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>

#include "cbsir/commands.hpp"
#include "cbsir/http_api.hpp"
#include "cbsir/retrieval_service.hpp"
#include "cli_app.hpp"

namespace {

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

int run_serve(const cbsir::cli::Options& o) {
  auto index = std::make_shared<const cbsir::LoadedIndex>(cbsir::load_index(o.index_path));
  cbsir::ServiceConfig cfg;
  cfg.page_size = o.page_size;
  cfg.session_timeout = std::chrono::seconds(o.session_timeout_s);
  cbsir::RetrievalService service(index, cfg);

  httplib::Server server;
  cbsir::mount_routes(server, service);
  if (!o.static_dir.empty() && !server.set_mount_point("/", o.static_dir)) {
    std::cerr << "cannot serve static files from " << o.static_dir << '\n';
    return 1;
  }
  g_server = &server;
  std::signal(SIGINT, stop_server);
  std::signal(SIGTERM, stop_server);
  std::cerr << "serving " << index->corpus.size() << " images (" << cbsir::color_count(index->corpus.palette())
            << " colors) on " << o.host << ':' << o.port << '\n';
  if (!server.listen(o.host, o.port)) {
    std::cerr << "cannot listen on " << o.host << ':' << o.port << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Content-based sub-image retrieval with relevance feedback"};
  cbsir::cli::Options o;
  const auto sub = cbsir::cli::configure(app, o);
  CLI11_PARSE(app, argc, argv);

  try {
    if (sub.index->parsed()) {
      const auto report = cbsir::cmd_index(o.dataset, cbsir::palette_from_colors(o.colors), o.index_out, std::cout);
      return report.skipped.empty() ? 0 : 3;
    }
    if (sub.query->parsed()) {
      const auto index = cbsir::load_index(o.index_path);
      return cbsir::cmd_query(index, cbsir::read_image(o.query_image), o.top, o.interactive, std::cin, std::cout,
                              std::cerr);
    }
    if (sub.synth->parsed()) {
      cbsir::SynthConfig cfg;
      cfg.backgrounds = o.backgrounds;
      cfg.queries = o.queries;
      cfg.seed = o.seed;
      cbsir::cmd_synth(o.synth_out, cfg, std::cout);
      return 0;
    }
    if (sub.eval->parsed()) {
      const auto index = cbsir::load_index(o.index_path);
      const auto summary = cbsir::cmd_eval(index, o.queries_dir, o.answers, o.iterations, o.top, o.report, std::cout);
      return summary.missing.empty() ? 0 : 3;
    }
    if (sub.serve->parsed()) return run_serve(o);
  } catch (const cbsir::IndexFormatError& e) {
    std::cerr << "index error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
