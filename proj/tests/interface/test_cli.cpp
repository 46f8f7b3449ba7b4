#include <fstream>

#include "common.hpp"
#include "doctest.h"
#include "http_service.hpp"

using namespace itest;

TEST_CASE("cli: generate is stable and matches the library output") {
  const auto a = run_cli("generate --type redundant --n 6 --k 5 --seed 7");
  const auto b = run_cli("generate --type redundant --n 6 --k 5 --seed 7");
  CHECK(a.exit_code == 0);
  CHECK(a.out == b.out);
  CHECK(json::parse(a.out)["palettes"].size() == 5);
  CHECK(a.out == capi_generate(R"({"encoding": "redundant", "n": 6, "k": 5, "seed": 7})"));
}

TEST_CASE("cli and http produce identical palette bytes") {
  const std::string body =
      R"({"encoding": "color", "n": 5, "k": 3, "seed": 2, "constraints": {"required_colors": ["#1f77b4"], "excluded_colors": [0]}})";
  const auto path = scratch_dir() + "/request.json";
  std::ofstream(path) << body;
  const auto cli = run_cli("generate --request '" + path + "'");
  REQUIRE(cli.exit_code == 0);

  httplib::Server server;
  catpaw_http::SessionStore sessions(std::chrono::seconds(60),
                                     [] { return std::chrono::steady_clock::now(); });
  catpaw_http::install_routes(server, engine(), sessions);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client c("127.0.0.1", port);
  auto r = c.Post("/api/palettes/generate", body, "application/json");
  server.stop();
  t.join();
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(r->body == cli.out);

  // The flag form builds the same request.
  const auto flags = run_cli("generate --type color --n 5 --k 3 --seed 2 --require-color '#1f77b4' --exclude-color 0");
  CHECK(flags.out == cli.out);
}

TEST_CASE("cli exit codes") {
  CHECK(run_cli("generate --n 1").exit_code == 2);
  CHECK(run_cli("generate --n 11").exit_code == 2);
  CHECK(run_cli("generate --type hue --n 4").exit_code == 2);
  CHECK(run_cli("generate").exit_code == 2);
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("frobnicate").exit_code == 2);
  CHECK(run_cli("generate --n 4 --k 0").exit_code == 2);
  CHECK(run_cli("--help").exit_code == 0);
  // data and constraint failures
  CHECK(run_cli("generate --n 4 --type color --require-color 77").exit_code == 3);
  CHECK(run_cli("generate --n 2 --type color --require-color 1 --require-color 2 --require-color 3")
            .exit_code == 3);
  CHECK(run_cli("swap --palette c1/s2,c3/s4 --position 0 --channel shape --require-shape 2")
            .exit_code == 3);
  CHECK(run_cli("--data /nonexistent colors").exit_code == 3);
  CHECK(run_cli("ingest /nonexistent.tsv").exit_code == 3);
  CHECK(run_cli("plan --experiment E9").exit_code == 2);
  CHECK(run_cli("generate --request /nonexistent.json").exit_code == 3);
}

TEST_CASE("cli: plan manifests") {
  const std::pair<const char*, std::size_t> want[] = {{"E1", 540}, {"E2", 240}, {"E3", 810}, {"E4", 891}};
  for (auto [e, n] : want) {
    const auto r = run_cli(std::string("plan --experiment ") + e);
    CHECK(r.exit_code == 0);
    CHECK(count(r.out, "\ndesign\t") == n);
  }
}

TEST_CASE("cli: remaining subcommands run") {
  const auto trials = scratch_dir() + "/cli_trials.tsv";
  CHECK(run_cli("synth --seed 3 --trials 2500 -o '" + trials + "'").exit_code == 0);
  const auto ing = run_cli("ingest '" + trials + "'");
  CHECK(ing.exit_code == 0);
  CHECK(json::parse(ing.out)["records"] == 2500);
  const auto val = run_cli("validate '" + trials + "' --samples 5 --counts 3,4");
  CHECK(val.exit_code == 0);
  CHECK(val.out.rfind("# catpaw-rank-validation 1", 0) == 0);
  const auto rep = run_cli("report --n 4 --k 5");
  CHECK(rep.exit_code == 0);
  CHECK(rep.out.find("generated\t5\t") != std::string::npos);
  const auto m = run_cli("matrix --axis color --bin medium");
  CHECK(json::parse(m.out)["cells"].size() == 741);
  const auto stim = run_cli("stim --palette c1/s3,c9/s4 --seed 2");
  CHECK(count(stim.out, "class=\"mark\"") == 40);
  const auto aut = run_cli("auto --n 6");
  CHECK(json::parse(aut.out)["encoding"] == "redundant");
  const auto cfg = run_cli("config");
  std::ifstream f(data_dir() + "/config.json");
  CHECK(cfg.out == std::string((std::istreambuf_iterator<char>(f)), {}));
  // Evidence from a log replaces the synthetic default.
  const auto mx = run_cli("--evidence '" + trials + "' matrix --axis color --bin small");
  CHECK(json::parse(mx.out)["evidence"] == trials);
}

TEST_CASE("cli: CATPAW_DATA selects the data directory") {
  const auto r = run_cli("colors");
  const std::string cmd = "CATPAW_DATA=/nonexistent '" + cli_path() + "' colors >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  CHECK(r.exit_code == 0);
  CHECK(WEXITSTATUS(status) == 3);
}
