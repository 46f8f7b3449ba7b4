// catpaw command-line interface. Thin wrapper over the C API.
//
// Exit codes: 0 success, 2 usage error, 3 data or constraint error.

#include <charconv>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "catpaw.h"
#include "json.hpp"

#ifndef CATPAW_DEFAULT_DATA_DIR
#define CATPAW_DEFAULT_DATA_DIR "data"
#endif

using json = nlohmann::ordered_json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Failure {
  int exit_code;
};

int exit_for(catpaw_status s) {
  return s == CATPAW_ERR_INVALID_ARGUMENT ? kExitUsage : kExitData;
}

void check(catpaw_status s) {
  if (s == CATPAW_OK) return;
  std::string msg = catpaw_last_error();
  const std::string field = catpaw_last_error_field();
  std::cerr << "error [" << catpaw_status_name(s) << "]";
  if (!field.empty()) std::cerr << " (" << field << ")";
  std::cerr << ": " << msg << "\n";
  throw Failure{exit_for(s)};
}

// Owns a library-allocated string.
struct Out {
  char* p = nullptr;
  ~Out() { catpaw_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

std::string read_source(const std::string& path) {
  if (path == "-") {
    return std::string(std::istreambuf_iterator<char>(std::cin), {});
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error [io] (request): cannot read " << path << "\n";
    throw Failure{kExitData};
  }
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  out << text;
  if (!out) {
    std::cerr << "error [io] (out): cannot write " << out_path << "\n";
    throw Failure{kExitData};
  }
}

// "12" becomes a number, anything else stays a string (hex, shape name).
json ref(const std::string& s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc{} && ptr == s.data() + s.size()) return v;
  return s;
}

json refs(const std::vector<std::string>& xs) {
  json a = json::array();
  for (const auto& x : xs) a.push_back(ref(x));
  return a;
}

struct ConstraintFlags {
  std::vector<std::string> require_colors, require_shapes, pins, exclude_colors, exclude_shapes;

  void add(CLI::App* app) {
    app->add_option("--require-color", require_colors, "Colour that must appear (id or #hex)");
    app->add_option("--require-shape", require_shapes, "Shape that must appear (id or name)");
    app->add_option("--pin", pins, "Fixed colour/shape pairing, e.g. c3/s7");
    app->add_option("--exclude-color", exclude_colors, "Colour to leave out (id or #hex)");
    app->add_option("--exclude-shape", exclude_shapes, "Shape to leave out (id or name)");
  }

  json to_json() const {
    json c = json::object();
    if (!require_colors.empty()) c["required_colors"] = refs(require_colors);
    if (!require_shapes.empty()) c["required_shapes"] = refs(require_shapes);
    if (!pins.empty()) c["required_markers"] = pins;
    if (!exclude_colors.empty()) c["excluded_colors"] = refs(exclude_colors);
    if (!exclude_shapes.empty()) c["excluded_shapes"] = refs(exclude_shapes);
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"catpaw: categorical palettes for scatterplots"};
  app.require_subcommand(1);

  std::string data_dir;
  std::string config_path;
  std::string evidence_path;
  app.add_option("--data", data_dir, "Data directory (default: $CATPAW_DATA or the bundled data)");
  app.add_option("--config", config_path, "Configuration file");
  app.add_option("--evidence", evidence_path, "Trial log to build the evidence from");

  std::string out_path;
  auto add_out = [&](CLI::App* sub) { sub->add_option("-o,--out", out_path, "Output file"); };

  // generate
  auto* gen = app.add_subcommand("generate", "Ranked palettes for a category count");
  std::string gen_type = "auto", gen_request;
  int gen_n = 0, gen_k = 5;
  std::uint64_t gen_seed = 1;
  ConstraintFlags gen_c;
  gen->add_option("--type", gen_type, "color, shape, redundant or auto")
      ->check(CLI::IsMember({"color", "shape", "redundant", "auto"}, CLI::ignore_case));
  gen->add_option("--n", gen_n, "Number of categories")->check(CLI::Range(2, 10));
  gen->add_option("--k", gen_k, "Number of palettes")->check(CLI::Range(1, 100));
  gen->add_option("--seed", gen_seed, "Seed");
  gen->add_option("--request", gen_request, "JSON request file ('-' for stdin); replaces the flags");
  gen_c.add(gen);
  add_out(gen);

  // swap
  auto* swp = app.add_subcommand("swap", "Replace one palette element with the next best");
  std::string swp_palette, swp_channel, swp_request;
  int swp_position = -1;
  ConstraintFlags swp_c;
  swp->add_option("--palette", swp_palette, "Palette as markers, e.g. c1/s2,c5/s0");
  swp->add_option("--position", swp_position, "Entry to replace (0-based)")->check(CLI::NonNegativeNumber);
  swp->add_option("--channel", swp_channel, "color or shape")->check(CLI::IsMember({"color", "shape"}));
  swp->add_option("--request", swp_request, "JSON request file ('-' for stdin); replaces the flags");
  swp_c.add(swp);
  add_out(swp);

  // ingest
  auto* ing = app.add_subcommand("ingest", "Validate a trial log and summarise its matrices");
  std::string ing_trials;
  ing->add_option("trials", ing_trials, "Trial log")->required();
  add_out(ing);

  // matrix
  auto* mat = app.add_subcommand("matrix", "Pairwise accuracy matrix");
  std::string mat_axis = "color", mat_bin = "all", mat_format = "json";
  mat->add_option("--axis", mat_axis, "color, shape or marker");
  mat->add_option("--bin", mat_bin, "small, medium, large or all");
  mat->add_option("--format", mat_format, "json or tsv")->check(CLI::IsMember({"json", "tsv"}));
  add_out(mat);

  // stim
  auto* stim = app.add_subcommand("stim", "Render one scatterplot stimulus as SVG");
  std::string stim_palette;
  int stim_n = 0;
  std::uint64_t stim_seed = 1;
  bool stim_engagement = false;
  stim->add_option("--palette", stim_palette, "Palette as markers, e.g. c1/s2,c5/s0")->required();
  stim->add_option("--n", stim_n, "Use the first n entries")->check(CLI::Range(2, 10));
  stim->add_option("--seed", stim_seed, "Seed");
  stim->add_flag("--engagement", stim_engagement, "Engagement check (gap 0.4)");
  add_out(stim);

  // plan
  auto* plan = app.add_subcommand("plan", "Experiment design manifest");
  std::string plan_exp, plan_dir;
  std::uint64_t plan_seed = 1;
  plan->add_option("--experiment", plan_exp, "E1, E2, E3 or E4")->required();
  plan->add_option("--seed", plan_seed, "Seed");
  plan->add_option("--out-dir", plan_dir, "Also write the manifest and every stimulus SVG here");
  add_out(plan);

  // validate
  auto* val = app.add_subcommand("validate", "Rank validation against a trial log");
  std::string val_trials, val_plot;
  int val_samples = 50, val_repeats = 3, val_resamples = 1000;
  std::uint64_t val_seed = 1;
  std::vector<int> val_counts;
  val->add_option("trials", val_trials, "Trial log")->required();
  val->add_option("--samples", val_samples, "Palettes per category count")->check(CLI::Range(1, 100000));
  val->add_option("--repeats", val_repeats, "Repeats")->check(CLI::Range(1, 1000));
  val->add_option("--resamples", val_resamples, "Bootstrap resamples")->check(CLI::Range(1, 1000000));
  val->add_option("--seed", val_seed, "Seed");
  val->add_option("--counts", val_counts, "Category counts (default: all in the log)")
      ->check(CLI::Range(2, 10))
      ->delimiter(',');
  val->add_option("--plot", val_plot, "Write the rank plot SVG here");
  add_out(val);

  // report
  auto* rep = app.add_subcommand("report", "Baseline comparison of palette groups");
  std::string rep_groups;
  int rep_n = 6, rep_k = 10;
  std::uint64_t rep_seed = 1;
  rep->add_option("--groups", rep_groups, "JSON file with named palette groups");
  rep->add_option("--n", rep_n, "Category count for the default groups")->check(CLI::Range(2, 10));
  rep->add_option("--k", rep_k, "Generated palettes in the default groups")->check(CLI::Range(1, 100));
  rep->add_option("--seed", rep_seed, "Seed");
  add_out(rep);

  // derive-pool
  auto* der = app.add_subcommand("derive-pool", "Re-derive the colour pool from the Lab grid");
  int der_k = 200;
  std::uint64_t der_seed = 32;
  bool der_no_manual = false;
  der->add_option("--k", der_k, "k-means centroids")->check(CLI::Range(2, 5000));
  der->add_option("--seed", der_seed, "k-means seed");
  der->add_flag("--no-manual", der_no_manual, "Leave out the hand-added colours");
  add_out(der);

  // synth
  auto* syn = app.add_subcommand("synth", "Synthetic trial log from the latent model");
  std::uint64_t syn_seed = 1;
  int syn_trials = 1000;
  double syn_timeout = 0.02;
  std::vector<std::string> syn_enc;
  syn->add_option("--seed", syn_seed, "Seed");
  syn->add_option("--trials", syn_trials, "Number of trials")->check(CLI::Range(1, 10000000));
  syn->add_option("--timeout-rate", syn_timeout, "Fraction of timed-out trials")->check(CLI::Range(0.0, 0.99));
  syn->add_option("--encodings", syn_enc, "Encodings to include")
      ->check(CLI::IsMember({"color", "shape", "redundant"}))
      ->delimiter(',');
  add_out(syn);

  // small lookups
  auto* aut = app.add_subcommand("auto", "Recommended encoding for a category count");
  int aut_n = 0;
  aut->add_option("--n", aut_n, "Number of categories")->required()->check(CLI::Range(2, 10));
  auto* col = app.add_subcommand("colors", "List the colour pool");
  auto* shp = app.add_subcommand("shapes", "List the shape catalog");
  auto* cfg = app.add_subcommand("config", "Print the effective configuration");
  for (auto* s : {aut, col, shp, cfg}) add_out(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  catpaw_engine* engine = nullptr;
  try {
    if (der->parsed()) {
      json req = {{"k", der_k}, {"seed", der_seed}, {"manual", !der_no_manual}};
      Out out;
      check(catpaw_derive_pool(req.dump().c_str(), &out.p));
      emit(out.str(), out_path);
      return 0;
    }

    if (data_dir.empty()) {
      const char* env = std::getenv("CATPAW_DATA");
      data_dir = env && *env ? env : CATPAW_DEFAULT_DATA_DIR;
    }
    check(catpaw_engine_open(data_dir.c_str(), config_path.empty() ? nullptr : config_path.c_str(),
                             evidence_path.empty() ? nullptr : evidence_path.c_str(), &engine));
    std::unique_ptr<catpaw_engine, decltype(&catpaw_engine_close)> guard(engine, catpaw_engine_close);
    Out out;

    if (gen->parsed()) {
      std::string body;
      if (!gen_request.empty()) {
        body = read_source(gen_request);
      } else {
        if (gen_n == 0) throw UsageError("generate: --n is required");
        json req = {{"encoding", gen_type}, {"n", gen_n}, {"k", gen_k}, {"seed", gen_seed}};
        req["constraints"] = gen_c.to_json();
        body = req.dump();
      }
      check(catpaw_generate(engine, body.c_str(), &out.p));
    } else if (swp->parsed()) {
      std::string body;
      if (!swp_request.empty()) {
        body = read_source(swp_request);
      } else {
        if (swp_palette.empty() || swp_position < 0)
          throw UsageError("swap: --palette and --position are required");
        json req = {{"palette", swp_palette}, {"position", swp_position}};
        if (!swp_channel.empty()) req["channel"] = swp_channel;
        req["constraints"] = swp_c.to_json();
        body = req.dump();
      }
      check(catpaw_swap(engine, body.c_str(), &out.p));
    } else if (ing->parsed()) {
      check(catpaw_ingest(engine, ing_trials.c_str(), &out.p));
    } else if (mat->parsed()) {
      check(catpaw_matrix(engine, mat_axis.c_str(), mat_bin.c_str(), mat_format.c_str(), &out.p));
    } else if (stim->parsed()) {
      json req = {{"palette", stim_palette}, {"seed", stim_seed}, {"engagement", stim_engagement}};
      if (stim_n) req["n"] = stim_n;
      check(catpaw_preview(engine, req.dump().c_str(), &out.p));
    } else if (plan->parsed()) {
      check(catpaw_plan(engine, plan_exp.c_str(), plan_seed,
                        plan_dir.empty() ? nullptr : plan_dir.c_str(), &out.p));
    } else if (val->parsed()) {
      json req = {{"trials", val_trials},
                  {"samples_per_n", val_samples},
                  {"repeats", val_repeats},
                  {"seed", val_seed},
                  {"resamples", val_resamples}};
      if (!val_counts.empty()) req["category_counts"] = val_counts;
      Out svg;
      check(catpaw_validate(engine, req.dump().c_str(), &out.p, val_plot.empty() ? nullptr : &svg.p));
      if (!val_plot.empty()) emit(svg.str(), val_plot);
    } else if (rep->parsed()) {
      json req = {{"n", rep_n}, {"k", rep_k}, {"seed", rep_seed}};
      if (!rep_groups.empty()) {
        json groups;
        try {
          groups = json::parse(read_source(rep_groups));
        } catch (const json::parse_error& e) {
          std::cerr << "error [parse] (groups): " << e.what() << "\n";
          return kExitData;
        }
        if (groups.is_object() && groups.contains("groups")) groups = groups["groups"];
        req["groups"] = groups;
      }
      check(catpaw_baseline(engine, req.dump().c_str(), &out.p));
    } else if (syn->parsed()) {
      json req = {{"seed", syn_seed}, {"trials", syn_trials}, {"timeout_rate", syn_timeout}};
      if (!syn_enc.empty()) req["encodings"] = syn_enc;
      check(catpaw_synth_trials(engine, req.dump().c_str(), &out.p));
    } else if (aut->parsed()) {
      check(catpaw_auto_encoding(engine, aut_n, &out.p));
    } else if (col->parsed()) {
      check(catpaw_colors(engine, &out.p));
    } else if (shp->parsed()) {
      check(catpaw_shapes(engine, &out.p));
    } else if (cfg->parsed()) {
      check(catpaw_config(engine, &out.p));
    }
    emit(out.str(), out_path);
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "error [usage]: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Failure& f) {
    return f.exit_code;
  }
}
