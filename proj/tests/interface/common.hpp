#pragma once

#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>
#include <sys/wait.h>

#include "catpaw.h"
#include "json.hpp"

namespace itest {

using json = nlohmann::ordered_json;

inline std::string data_dir() { return CATPAW_TEST_DATA_DIR; }
inline std::string cli_path() { return CATPAW_TEST_CLI; }
inline std::string scratch_dir() { return CATPAW_TEST_SCRATCH; }

struct Str {
  char* p = nullptr;
  ~Str() { catpaw_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

using EnginePtr = std::unique_ptr<catpaw_engine, decltype(&catpaw_engine_close)>;

inline EnginePtr open_engine(const char* trials = nullptr) {
  catpaw_engine* e = nullptr;
  if (catpaw_engine_open(data_dir().c_str(), nullptr, trials, &e) != CATPAW_OK)
    throw std::runtime_error(catpaw_last_error());
  return EnginePtr(e, catpaw_engine_close);
}

// Shared engine over the bundled data and synthetic evidence.
inline const catpaw_engine* engine() {
  static EnginePtr e = open_engine();
  return e.get();
}

inline std::string capi_generate(const std::string& body) {
  Str out;
  if (catpaw_generate(engine(), body.c_str(), &out.p) != CATPAW_OK)
    throw std::runtime_error(catpaw_last_error());
  return out.str();
}

struct RunResult {
  int exit_code = -1;
  std::string out;
};

// Runs the CLI through the shell; stderr is discarded.
inline RunResult run_cli(const std::string& args) {
  const std::string cmd = "'" + cli_path() + "' " + args + " 2>/dev/null";
  RunResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, got);
  const int status = pclose(p);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

inline std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace itest
