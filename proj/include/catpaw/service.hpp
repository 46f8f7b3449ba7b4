#pragma once

// JSON-facing engine shared by the C API, the CLI and the HTTP server.
// Every response body is produced here so that all front ends emit the same
// bytes for the same request.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "catpaw/analysis.hpp"
#include "catpaw/catalog.hpp"
#include "catpaw/colorlab.hpp"
#include "catpaw/evidence.hpp"
#include "catpaw/optimizer.hpp"
#include "catpaw/stimgen.hpp"

namespace catpaw {

inline constexpr int kSchemaVersion = 1;

struct AutoEncodingRule {
  int min_n = 2;
  int max_n = 10;
  Encoding encoding = Encoding::Redundant;
  std::string note;  // empty when there is nothing to add
};

struct AutoEncodingChoice {
  Encoding encoding = Encoding::Redundant;
  std::string note;
};

struct ServiceConfig {
  JndParams jnd;
  double mark_px = kDefaultMarkPx;
  OptimizerConfig optimizer;
  std::vector<AutoEncodingRule> auto_encoding;
  std::optional<std::filesystem::path> trials;  // evidence source
  std::uint64_t synthetic_seed = 1;
  std::uint32_t synthetic_trials_per_cell = 200;
  int session_ttl_seconds = 3600;

  /// Built-in defaults, identical to the shipped config.json.
  static ServiceConfig defaults();

  /// Throws InvalidArgument for rules that overlap or leave a count in
  /// [2, 10] uncovered, and propagates JND / optimizer validation.
  void validate() const;

  AutoEncodingChoice resolve_auto(int n) const;
};

/// Parses a config document; absent keys keep their defaults, unknown keys
/// raise Parse. Relative trial paths resolve against `base_dir`.
ServiceConfig parse_config(std::string_view json,
                           const std::filesystem::path& base_dir = {});
std::string format_config(const ServiceConfig& config);

struct EngineOptions {
  std::filesystem::path data_dir;
  std::optional<std::filesystem::path> config;  // default: data_dir/config.json if present
  std::optional<std::filesystem::path> trials;  // overrides the config
};

/// Data directory from CATPAW_DATA, falling back to `fallback`.
std::filesystem::path data_dir_from_env(const std::filesystem::path& fallback);

/// Immutable after construction; all methods are safe to call concurrently.
class Engine {
 public:
  explicit Engine(const EngineOptions& options);

  const ServiceConfig& config() const { return config_; }
  const Pools& pools() const { return pools_; }
  const EvidenceSet& evidence() const { return evidence_; }
  const std::vector<NamedPalette>& designer() const { return designer_; }
  /// "synthetic" or the trial file the evidence came from.
  const std::string& evidence_source() const { return evidence_source_; }

  Model model() const;

  std::string colors_json() const;
  std::string shapes_json() const;
  std::string matrix_json(std::string_view axis, std::string_view bin) const;
  std::string matrix_table(std::string_view axis, std::string_view bin) const;
  std::string auto_encoding_json(int n) const;

  std::string generate(std::string_view request_json) const;
  std::string swap(std::string_view request_json) const;
  std::string preview_svg(std::string_view request_json) const;

  std::string plan(std::string_view experiment, std::uint64_t seed) const;
  /// Writes manifest.tsv plus one SVG per design and engagement check.
  void render_plan(std::string_view experiment, std::uint64_t seed,
                   const std::filesystem::path& out_dir) const;

  std::string ingest(const std::filesystem::path& trials) const;
  std::string validate(std::string_view request_json,
                       std::string* plot_svg) const;
  std::string baseline(std::string_view request_json) const;
  std::string synth_trials(std::string_view request_json) const;

 private:
  ServiceConfig config_;
  Pools pools_;
  EvidenceSet evidence_;
  std::vector<NamedPalette> designer_;
  std::string evidence_source_;
};

/// Pool derivation with the manual additions, as a pool file.
std::string derive_pool_file(std::string_view request_json);

}  // namespace catpaw
