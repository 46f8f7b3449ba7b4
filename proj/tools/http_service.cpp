#include "http_service.hpp"

#include <random>
#include <set>

namespace catpaw_http {

using json = nlohmann::ordered_json;
using steady = std::chrono::steady_clock;

namespace {

struct Out {
  char* p = nullptr;
  ~Out() { catpaw_string_free(p); }
};

void send_error(httplib::Response& res, int http, const std::string& code,
                const std::string& message, const std::string& field) {
  json body = {{"code", code}, {"message", message}, {"field", field}};
  res.status = http;
  res.set_content(body.dump() + "\n", "application/json");
}

// Sends the library result, or its error with the mapped HTTP status.
bool reply(httplib::Response& res, catpaw_status s, const Out& out, const char* type) {
  if (s != CATPAW_OK) {
    send_error(res, catpaw_http_status(s), catpaw_status_name(s), catpaw_last_error(),
               catpaw_last_error_field());
    return false;
  }
  res.status = 200;
  res.set_content(out.p, type);
  return true;
}

std::string random_id() {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  static const char* hex = "0123456789abcdef";
  std::string s(32, '0');
  for (auto& ch : s) ch = hex[rng() & 15];
  return s;
}

std::string param(const httplib::Request& req, const char* key, const std::string& def) {
  return req.has_param(key) ? req.get_param_value(key) : def;
}

json merge_ids(const json& a, const json& b) {
  std::set<long long> ids;
  for (const auto* src : {&a, &b})
    if (src->is_array())
      for (const auto& v : *src)
        if (v.is_number_integer()) ids.insert(v.get<long long>());
  json out = json::array();
  for (auto v : ids) out.push_back(v);
  // Non-numeric references (hex, names) from the request pass through.
  for (const auto* src : {&a, &b})
    if (src->is_array())
      for (const auto& v : *src)
        if (!v.is_number_integer()) out.push_back(v);
  return out;
}

}  // namespace

SessionStore::SessionStore(std::chrono::seconds ttl, Clock clock)
    : ttl_(ttl), clock_(std::move(clock)) {}

void SessionStore::evict_locked(steady::time_point now) {
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (now - it->second->last_used > ttl_) it = sessions_.erase(it);
    else ++it;
  }
}

std::shared_ptr<Session> SessionStore::find(const std::string& id) {
  std::lock_guard lock(mu_);
  const auto now = clock_();
  evict_locked(now);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return nullptr;
  it->second->last_used = now;
  return it->second;
}

std::pair<std::string, std::shared_ptr<Session>> SessionStore::create() {
  std::lock_guard lock(mu_);
  const auto now = clock_();
  evict_locked(now);
  auto s = std::make_shared<Session>();
  s->last_used = now;
  s->palette = nullptr;
  s->constraints = json::object();
  std::string id;
  do id = random_id();
  while (sessions_.count(id));
  sessions_[id] = s;
  return {id, s};
}

std::size_t SessionStore::size() {
  std::lock_guard lock(mu_);
  evict_locked(clock_());
  return sessions_.size();
}

std::chrono::seconds session_ttl(const catpaw_engine* engine) {
  Out out;
  if (catpaw_config(engine, &out.p) != CATPAW_OK) return std::chrono::seconds(3600);
  const auto cfg = json::parse(out.p);
  return std::chrono::seconds(cfg["sessions"]["ttl_seconds"].get<int>());
}

void install_routes(httplib::Server& server, const catpaw_engine* engine,
                    SessionStore& sessions) {
  server.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"status", "ok"}, {"version", catpaw_version()}}.dump() + "\n",
                    "application/json");
  });

  server.Get("/api/colors", [engine](const httplib::Request&, httplib::Response& res) {
    Out out;
    reply(res, catpaw_colors(engine, &out.p), out, "application/json");
  });

  server.Get("/api/shapes", [engine](const httplib::Request&, httplib::Response& res) {
    Out out;
    reply(res, catpaw_shapes(engine, &out.p), out, "application/json");
  });

  server.Get("/api/config", [engine](const httplib::Request&, httplib::Response& res) {
    Out out;
    reply(res, catpaw_config(engine, &out.p), out, "application/json");
  });

  server.Get("/api/matrix", [engine](const httplib::Request& req, httplib::Response& res) {
    Out out;
    const auto axis = param(req, "axis", "color");
    const auto bin = param(req, "bin", "all");
    const auto format = param(req, "format", "json");
    reply(res, catpaw_matrix(engine, axis.c_str(), bin.c_str(), format.c_str(), &out.p), out,
          format == "tsv" ? "text/tab-separated-values" : "application/json");
  });

  server.Get("/api/auto-encoding", [engine](const httplib::Request& req, httplib::Response& res) {
    int n = 0;
    try {
      n = std::stoi(param(req, "n", ""));
    } catch (const std::exception&) {
      send_error(res, 400, "invalid_argument", "'n' must be an integer", "n");
      return;
    }
    Out out;
    reply(res, catpaw_auto_encoding(engine, n, &out.p), out, "application/json");
  });

  server.Post("/api/palettes/generate", [engine, &sessions](const httplib::Request& req,
                                                            httplib::Response& res) {
    std::shared_ptr<Session> session;
    std::string id = req.get_header_value(kSessionHeader);
    if (!id.empty()) session = sessions.find(id);
    if (!session) std::tie(id, session) = sessions.create();
    std::lock_guard lock(session->mu);
    Out out;
    if (!reply(res, catpaw_generate(engine, req.body.c_str(), &out.p), out, "application/json"))
      return;
    const auto body = json::parse(out.p);
    session->constraints = body["constraints"];
    session->palette = body["palettes"].empty() ? json(nullptr) : body["palettes"][0];
    res.set_header(kSessionHeader, id);
  });

  server.Post("/api/palettes/swap", [engine, &sessions](const httplib::Request& req,
                                                        httplib::Response& res) {
    const std::string id = req.get_header_value(kSessionHeader);
    if (id.empty()) {
      Out out;
      reply(res, catpaw_swap(engine, req.body.c_str(), &out.p), out, "application/json");
      return;
    }
    auto session = sessions.find(id);
    if (!session) {
      send_error(res, 404, "unknown_id", "unknown or expired session", "session");
      return;
    }
    std::lock_guard lock(session->mu);
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error& e) {
      send_error(res, 400, "parse", std::string("malformed JSON: ") + e.what(), "body");
      return;
    }
    if (!body.is_object()) {
      send_error(res, 400, "parse", "request body must be a JSON object", "body");
      return;
    }
    if (!body.contains("palette")) {
      if (session->palette.is_null()) {
        send_error(res, 409, "constraint", "session has no palette to swap from", "palette");
        return;
      }
      body["palette"] = session->palette;
      if (!body.contains("rank")) body["rank"] = session->palette["rank"];
    }
    json c = body.contains("constraints") && body["constraints"].is_object()
                 ? body["constraints"]
                 : session->constraints;
    for (const char* key : {"excluded_colors", "excluded_shapes"}) {
      const json mine = c.contains(key) ? c[key] : json::array();
      const json kept = session->constraints.contains(key) ? session->constraints[key] : json::array();
      c[key] = merge_ids(mine, kept);
    }
    body["constraints"] = c;
    Out out;
    if (!reply(res, catpaw_swap(engine, body.dump().c_str(), &out.p), out, "application/json"))
      return;
    const auto result = json::parse(out.p);
    session->palette = result["palette"];
    session->constraints = result["constraints"];
    res.set_header(kSessionHeader, id);
  });

  server.Get("/api/stimulus/preview", [engine](const httplib::Request& req,
                                               httplib::Response& res) {
    json body;
    body["palette"] = param(req, "palette", "");
    try {
      if (req.has_param("seed")) body["seed"] = std::stoull(req.get_param_value("seed"));
      if (req.has_param("n")) body["n"] = std::stoi(req.get_param_value("n"));
    } catch (const std::exception&) {
      send_error(res, 400, "invalid_argument", "seed and n must be integers", "query");
      return;
    }
    body["engagement"] = param(req, "engagement", "false") == "true";
    Out out;
    reply(res, catpaw_preview(engine, body.dump().c_str(), &out.p), out, "image/svg+xml");
  });

  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty() && res.status == 404)
      send_error(res, 404, "not_found", "no such route", "path");
  });

  server.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
          std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          what = e.what();
        } catch (...) {
        }
        send_error(res, 500, "internal", what, "");
      });
}

}  // namespace catpaw_http
