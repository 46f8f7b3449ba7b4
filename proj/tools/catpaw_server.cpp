// catpaw HTTP service.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "catpaw.h"
#include "http_service.hpp"

#ifndef CATPAW_DEFAULT_DATA_DIR
#define CATPAW_DEFAULT_DATA_DIR "data"
#endif

int main(int argc, char** argv) {
  CLI::App app{"catpaw-server: palette service over HTTP"};
  std::string host = "127.0.0.1";
  int port = 8080;
  int threads = 8;
  std::string data_dir, config_path, evidence_path;
  app.add_option("--host", host, "Bind address");
  app.add_option("--port", port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
  app.add_option("--threads", threads, "Worker threads")->check(CLI::Range(1, 256));
  app.add_option("--data", data_dir, "Data directory (default: $CATPAW_DATA or the bundled data)");
  app.add_option("--config", config_path, "Configuration file");
  app.add_option("--evidence", evidence_path, "Trial log to build the evidence from");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (data_dir.empty()) {
    const char* env = std::getenv("CATPAW_DATA");
    data_dir = env && *env ? env : CATPAW_DEFAULT_DATA_DIR;
  }
  catpaw_engine* raw = nullptr;
  const auto s = catpaw_engine_open(data_dir.c_str(),
                                    config_path.empty() ? nullptr : config_path.c_str(),
                                    evidence_path.empty() ? nullptr : evidence_path.c_str(), &raw);
  if (s != CATPAW_OK) {
    std::cerr << "error [" << catpaw_status_name(s) << "]: " << catpaw_last_error() << "\n";
    return 3;
  }
  std::unique_ptr<catpaw_engine, decltype(&catpaw_engine_close)> engine(raw, catpaw_engine_close);

  catpaw_http::SessionStore sessions(catpaw_http::session_ttl(engine.get()),
                                     [] { return std::chrono::steady_clock::now(); });
  httplib::Server server;
  server.new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<size_t>(threads)); };
  catpaw_http::install_routes(server, engine.get(), sessions);

  if (port == 0) port = server.bind_to_any_port(host);
  else if (!server.bind_to_port(host, port)) port = -1;
  if (port < 0) {
    std::cerr << "error [io]: cannot bind " << host << "\n";
    return 3;
  }
  std::printf("listening on http://%s:%d\n", host.c_str(), port);
  std::fflush(stdout);
  return server.listen_after_bind() ? 0 : 3;
}
