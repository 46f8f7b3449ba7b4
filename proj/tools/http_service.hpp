#pragma once

// HTTP routes over the C API, shared by catpaw-server and the tests.

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "catpaw.h"
#include "httplib.h"
#include "json.hpp"

namespace catpaw_http {

using Clock = std::function<std::chrono::steady_clock::time_point()>;

struct Session {
  std::mutex mu;  // serialises requests for one session
  nlohmann::ordered_json palette;      // current palette, null before generate
  nlohmann::ordered_json constraints;  // snapshot, exclusions only grow
  std::chrono::steady_clock::time_point last_used;
};

/// In-memory sessions with idle eviction.
class SessionStore {
 public:
  SessionStore(std::chrono::seconds ttl, Clock clock);

  /// Existing session or nullptr; refreshes its idle timer.
  std::shared_ptr<Session> find(const std::string& id);
  std::pair<std::string, std::shared_ptr<Session>> create();
  std::size_t size();

 private:
  void evict_locked(std::chrono::steady_clock::time_point now);

  std::mutex mu_;
  std::chrono::seconds ttl_;
  Clock clock_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

inline constexpr const char* kSessionHeader = "X-Catpaw-Session";

/// Registers every /api route on `server`. `engine` must outlive it.
void install_routes(httplib::Server& server, const catpaw_engine* engine,
                    SessionStore& sessions);

/// Session idle limit from the engine's configuration.
std::chrono::seconds session_ttl(const catpaw_engine* engine);

}  // namespace catpaw_http
