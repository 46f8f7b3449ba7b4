#include "catpaw/service.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>

#include "catpaw/error.hpp"
#include "catpaw/synth.hpp"
#include "json.hpp"

namespace catpaw {

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kComponentNames[] = {
    "marker_pair_mean",   "marker_individual_mean", "color_pair_mean",
    "shape_pair_mean",    "lightness_variance",     "shape_type_mix"};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json parse_body(std::string_view text) {
  try {
    auto j = json::parse(text.begin(), text.end());
    if (!j.is_object()) {
      throw Error(ErrorCode::Parse, "request body must be a JSON object", "body");
    }
    if (const auto v = j.find("version");
        v != j.end() && !(v->is_number_integer() && *v == kSchemaVersion)) {
      throw Error(ErrorCode::Parse,
                  "unsupported schema version (expected " + std::to_string(kSchemaVersion) + ")",
                  "version");
    }
    return j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string("malformed JSON: ") + e.what(), "body");
  }
}

[[noreturn]] void bad_type(const std::string& field, const char* want) {
  throw Error(ErrorCode::InvalidArgument, "'" + field + "' must be " + want, field);
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return k == a; }) == allowed.end()) {
      const auto field = where.empty() ? k : where + "." + k;
      throw Error(ErrorCode::Parse, "unknown key '" + field + "'", field);
    }
  }
}

const json* find(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? nullptr : &*it;
}

std::int64_t get_int(const json& j, const char* key, std::int64_t def,
                     const std::string& field) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_number_integer()) bad_type(field, "an integer");
  return v->get<std::int64_t>();
}

std::uint64_t get_seed(const json& j, const char* key, std::uint64_t def,
                       const std::string& field) {
  const json* v = find(j, key);
  if (!v) return def;
  if (v->is_number_unsigned()) return v->get<std::uint64_t>();
  if (v->is_number_integer() && v->get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v->get<std::int64_t>());
  bad_type(field, "a non-negative integer");
}

double get_double(const json& j, const char* key, double def,
                  const std::string& field) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_number()) bad_type(field, "a number");
  return v->get<double>();
}

std::string get_string(const json& j, const char* key, std::string def,
                       const std::string& field) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_string()) bad_type(field, "a string");
  return v->get<std::string>();
}

bool get_bool(const json& j, const char* key, bool def, const std::string& field) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_boolean()) bad_type(field, "a boolean");
  return v->get<bool>();
}

const json& get_object(const json& j, const char* key, const std::string& field) {
  static const json empty = json::object();
  const json* v = find(j, key);
  if (!v) return empty;
  if (!v->is_object()) bad_type(field, "an object");
  return *v;
}

// Colour references: pool id, "#rrggbb" (mapped to the nearest pool colour)
// or an object carrying "id" as emitted in responses.
struct Refs {
  const Pools* pools;
  std::vector<std::pair<std::string, ColorId>>* mapped;

  ColorId color(const json& v, const std::string& field) const {
    if (v.is_object()) {
      if (!v.contains("id")) bad_type(field, "a colour id, hex string or {\"id\": ...}");
      return color(v["id"], field);
    }
    if (v.is_number_integer()) {
      const auto id = v.get<std::int64_t>();
      if (id < 0 || id >= static_cast<std::int64_t>(pools->colors.size())) {
        throw Error(ErrorCode::UnknownId, "unknown colour id " + std::to_string(id), field);
      }
      return static_cast<ColorId>(id);
    }
    if (v.is_string()) {
      const auto text = v.get<std::string>();
      RgbColor rgb;
      try {
        rgb = parse_hex(text);
      } catch (const Error& e) {
        throw Error(ErrorCode::InvalidArgument, e.what(), field);
      }
      const ColorId id = nearest_representative(srgb_to_lab(rgb), pools->colors);
      if (mapped) mapped->emplace_back(format_hex(rgb), id);
      return id;
    }
    bad_type(field, "a colour id or hex string");
  }

  ShapeId shape(const json& v, const std::string& field) const {
    if (v.is_object()) {
      if (!v.contains("id")) bad_type(field, "a shape id, name or {\"id\": ...}");
      return shape(v["id"], field);
    }
    if (v.is_number_integer()) {
      const auto id = v.get<std::int64_t>();
      if (id < 0 || id >= static_cast<std::int64_t>(pools->shapes.size())) {
        throw Error(ErrorCode::UnknownId, "unknown shape id " + std::to_string(id), field);
      }
      return static_cast<ShapeId>(id);
    }
    if (v.is_string()) {
      const auto name = v.get<std::string>();
      if (auto id = pools->shapes.find(name)) return *id;
      throw Error(ErrorCode::UnknownId, "unknown shape '" + name + "'", field);
    }
    bad_type(field, "a shape id or name");
  }

  Marker marker(const json& v, const std::string& field) const {
    if (v.is_string()) {
      auto ms = parse_marker_list(v.get<std::string>());
      if (ms.size() != 1) bad_type(field, "a single marker");
      check_ids(ms[0], field);
      return ms[0];
    }
    if (!v.is_object()) bad_type(field, "a marker object");
    check_keys(v, {"color", "shape"}, field);
    Marker m;
    if (const json* c = find(v, "color")) m.color = color(*c, field + ".color");
    if (const json* s = find(v, "shape")) m.shape = shape(*s, field + ".shape");
    return m;
  }

  void check_ids(const Marker& m, const std::string& field) const {
    if (m.color) color(json(*m.color), field);
    if (m.shape) shape(json(*m.shape), field);
  }

  template <class F>
  auto list(const json& j, const char* key, const std::string& where, F f) const {
    using T = decltype(f(json(), std::string()));
    std::vector<T> out;
    const json* v = find(j, key);
    if (!v) return out;
    const std::string field = where.empty() ? std::string(key) : where + "." + key;
    if (!v->is_array()) bad_type(field, "an array");
    for (std::size_t i = 0; i < v->size(); ++i)
      out.push_back(f((*v)[i], field + "[" + std::to_string(i) + "]"));
    return out;
  }
};

Constraints parse_constraints(const json& j, const Refs& refs) {
  const std::string where = "constraints";
  check_keys(j,
             {"required_colors", "required_shapes", "required_markers",
              "excluded_colors", "excluded_shapes", "candidate_colors",
              "candidate_shapes"},
             where);
  auto col = [&](const json& v, const std::string& f) { return refs.color(v, f); };
  auto shp = [&](const json& v, const std::string& f) { return refs.shape(v, f); };
  Constraints c;
  for (ColorId id : refs.list(j, "required_colors", where, col)) c.required_colors.insert(id);
  for (ShapeId id : refs.list(j, "required_shapes", where, shp)) c.required_shapes.insert(id);
  c.required_markers = refs.list(j, "required_markers", where,
                                 [&](const json& v, const std::string& f) {
                                   auto m = refs.marker(v, f);
                                   if (!m.color || !m.shape)
                                     bad_type(f, "a marker with both colour and shape");
                                   return m;
                                 });
  for (ColorId id : refs.list(j, "excluded_colors", where, col)) c.excluded_colors.insert(id);
  for (ShapeId id : refs.list(j, "excluded_shapes", where, shp)) c.excluded_shapes.insert(id);
  if (find(j, "candidate_colors")) c.candidate_colors = refs.list(j, "candidate_colors", where, col);
  if (find(j, "candidate_shapes")) c.candidate_shapes = refs.list(j, "candidate_shapes", where, shp);
  return c;
}

json constraints_json(const Constraints& c) {
  json j = json::object();
  j["required_colors"] = std::vector<int>(c.required_colors.begin(), c.required_colors.end());
  j["required_shapes"] = std::vector<int>(c.required_shapes.begin(), c.required_shapes.end());
  json pins = json::array();
  for (const auto& m : c.required_markers) pins.push_back({{"color", *m.color}, {"shape", *m.shape}});
  j["required_markers"] = pins;
  j["excluded_colors"] = std::vector<int>(c.excluded_colors.begin(), c.excluded_colors.end());
  j["excluded_shapes"] = std::vector<int>(c.excluded_shapes.begin(), c.excluded_shapes.end());
  j["candidate_colors"] = c.candidate_colors ? json(*c.candidate_colors) : json(nullptr);
  j["candidate_shapes"] = c.candidate_shapes ? json(*c.candidate_shapes) : json(nullptr);
  return j;
}

ScoringWeights parse_weights(const json& j, ScoringWeights w, const std::string& where) {
  check_keys(j,
             {"marker_pair_mean", "marker_individual_mean", "color_pair_mean",
              "shape_pair_mean", "lightness_variance", "shape_type_mix"},
             where);
  w.marker_pair_mean = get_double(j, "marker_pair_mean", w.marker_pair_mean, where + ".marker_pair_mean");
  w.marker_individual_mean = get_double(j, "marker_individual_mean", w.marker_individual_mean,
                                        where + ".marker_individual_mean");
  w.color_pair_mean = get_double(j, "color_pair_mean", w.color_pair_mean, where + ".color_pair_mean");
  w.shape_pair_mean = get_double(j, "shape_pair_mean", w.shape_pair_mean, where + ".shape_pair_mean");
  w.lightness_variance = get_double(j, "lightness_variance", w.lightness_variance,
                                    where + ".lightness_variance");
  w.shape_type_mix = get_double(j, "shape_type_mix", w.shape_type_mix, where + ".shape_type_mix");
  try {
    w.validate();
  } catch (const Error& e) {
    throw Error(e.code(), e.what(), where);
  }
  return w;
}

json weights_json(const ScoringWeights& w) {
  return {{"marker_pair_mean", w.marker_pair_mean},
          {"marker_individual_mean", w.marker_individual_mean},
          {"color_pair_mean", w.color_pair_mean},
          {"shape_pair_mean", w.shape_pair_mean},
          {"lightness_variance", w.lightness_variance},
          {"shape_type_mix", w.shape_type_mix}};
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json color_json(const ColorEntry& c) {
  return {{"id", c.id}, {"hex", c.hex}, {"name", c.display_name}};
}

json shape_json(const ShapeEntry& s) {
  return {{"id", s.id}, {"name", s.name}, {"fill_class", fill_class_name(s.fill_class)}};
}

json scored_json(const ScoredPalette& sp, const Pools& pools) {
  json j;
  j["rank"] = sp.rank;
  j["key"] = canonical_key(sp.palette);
  j["encoding"] = encoding_name(sp.palette.encoding);
  j["score"] = sp.score;
  const auto& c = sp.components;
  const std::optional<double> comps[] = {c.marker_pair_mean,  c.marker_individual_mean,
                                         c.color_pair_mean,   c.shape_pair_mean,
                                         c.lightness_variance, c.shape_type_mix};
  json cj = json::object();
  for (int i = 0; i < 6; ++i) cj[kComponentNames[i]] = opt(comps[i]);
  j["components"] = cj;
  json entries = json::array();
  for (const auto& m : sp.palette.entries) {
    json e;
    e["color"] = m.color ? color_json(pools.colors.at(*m.color)) : json(nullptr);
    e["shape"] = m.shape ? shape_json(pools.shapes.at(*m.shape)) : json(nullptr);
    entries.push_back(e);
  }
  j["entries"] = entries;
  return j;
}

Encoding infer_encoding(const std::vector<Marker>& entries) {
  bool c = false, s = false;
  for (const auto& m : entries) {
    c = c || m.color.has_value();
    s = s || m.shape.has_value();
  }
  if (c && s) return Encoding::Redundant;
  return s ? Encoding::ShapeOnly : Encoding::ColorOnly;
}

// Palette from {"encoding"?, "entries": [...]}, a marker list string, or a
// response palette object.
Palette parse_palette(const json& v, const Refs& refs, const std::string& field,
                      const Pools& pools) {
  Palette p;
  if (v.is_string()) {
    p.entries = parse_marker_list(v.get<std::string>());
    for (std::size_t i = 0; i < p.entries.size(); ++i)
      refs.check_ids(p.entries[i], field + "[" + std::to_string(i) + "]");
    p.encoding = infer_encoding(p.entries);
  } else if (v.is_object()) {
    const json* e = find(v, "entries");
    if (!e || !e->is_array()) bad_type(field + ".entries", "an array");
    for (std::size_t i = 0; i < e->size(); ++i)
      p.entries.push_back(refs.marker((*e)[i], field + ".entries[" + std::to_string(i) + "]"));
    if (const json* enc = find(v, "encoding")) {
      if (!enc->is_string()) bad_type(field + ".encoding", "a string");
      p.encoding = parse_encoding(enc->get<std::string>());
    } else {
      p.encoding = infer_encoding(p.entries);
    }
  } else {
    bad_type(field, "a palette object or marker list");
  }
  try {
    validate_palette(p, pools.colors.size(), pools.shapes.size());
  } catch (const Error& e) {
    throw Error(e.code(), e.what(), field);
  }
  return p;
}

void check_range(std::int64_t v, std::int64_t lo, std::int64_t hi, const std::string& field) {
  if (v < lo || v > hi) {
    throw Error(ErrorCode::InvalidArgument,
                "'" + field + "' must lie in [" + std::to_string(lo) + ", " +
                    std::to_string(hi) + "], got " + std::to_string(v),
                field);
  }
}

// Constraint errors name the Constraints member; requests nest them.
template <class F>
auto in_request(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    static const std::set<std::string> members{
        "required_colors", "required_shapes", "required_markers", "excluded_colors",
        "excluded_shapes", "candidate_colors", "candidate_shapes"};
    if (members.count(e.field())) throw Error(e.code(), e.what(), "constraints." + e.field());
    throw;
  }
}

std::string read_file(const std::filesystem::path& p) { return read_text_file(p); }

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string(), "path");
}

// Engagement checks use colours spread across the pool.
std::vector<MarkStyle> engagement_styles(int n, const Pools& pools) {
  std::vector<MarkStyle> out;
  const auto step = pools.colors.size() / static_cast<std::size_t>(n);
  for (int i = 0; i < n; ++i)
    out.push_back({pools.colors.at(static_cast<ColorId>(i * step)).hex, 0});
  return out;
}

}  // namespace

// ---------------------------------------------------------------- config

ServiceConfig ServiceConfig::defaults() {
  ServiceConfig c;
  c.auto_encoding = {
      {2, 2, Encoding::ColorOnly,
       "two categories: redundancy showed no reliable benefit, colour alone suffices"},
      {3, 4, Encoding::Redundant,
       "diminished benefit: redundancy helps less below five categories"},
      {5, 8, Encoding::Redundant, ""},
      {9, 10, Encoding::Redundant,
       "diminished benefit: redundancy helps less above eight categories"},
  };
  return c;
}

void ServiceConfig::validate() const {
  jnd.validate();
  optimizer.validate();
  if (!(mark_px > 0)) throw Error(ErrorCode::InvalidArgument, "mark_px must be positive", "mark_px");
  if (session_ttl_seconds <= 0)
    throw Error(ErrorCode::InvalidArgument, "session ttl must be positive", "sessions.ttl_seconds");
  for (int n = 2; n <= 10; ++n) {
    int hits = 0;
    for (const auto& r : auto_encoding) hits += (r.min_n <= n && n <= r.max_n);
    if (hits != 1) {
      throw Error(ErrorCode::InvalidArgument,
                  "auto_encoding must cover n = " + std::to_string(n) + " exactly once",
                  "auto_encoding");
    }
  }
}

AutoEncodingChoice ServiceConfig::resolve_auto(int n) const {
  check_range(n, 2, 10, "n");
  for (const auto& r : auto_encoding)
    if (r.min_n <= n && n <= r.max_n) return {r.encoding, r.note};
  throw Error(ErrorCode::InvalidArgument, "no auto_encoding rule for n", "auto_encoding");
}

ServiceConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  const json j = parse_body(text);
  check_keys(j, {"version", "jnd", "mark_px", "optimizer", "auto_encoding", "evidence", "sessions"}, "");
  if (get_int(j, "version", kSchemaVersion, "version") != kSchemaVersion) {
    throw Error(ErrorCode::Parse, "unsupported config version", "version");
  }
  ServiceConfig c = ServiceConfig::defaults();

  const json& jj = get_object(j, "jnd", "jnd");
  check_keys(jj, {"profile", "L", "a", "b", "p", "pixels_per_degree"}, "jnd");
  c.jnd.profile = get_string(jj, "profile", c.jnd.profile, "jnd.profile");
  for (auto [key, axis] : {std::pair{"L", &c.jnd.L}, {"a", &c.jnd.a}, {"b", &c.jnd.b}}) {
    const std::string f = std::string("jnd.") + key;
    const json& ax = get_object(jj, key, f);
    check_keys(ax, {"slope", "intercept"}, f);
    axis->slope = get_double(ax, "slope", axis->slope, f + ".slope");
    axis->intercept = get_double(ax, "intercept", axis->intercept, f + ".intercept");
  }
  c.jnd.p = get_double(jj, "p", c.jnd.p, "jnd.p");
  c.jnd.pixels_per_degree = get_double(jj, "pixels_per_degree", c.jnd.pixels_per_degree,
                                       "jnd.pixels_per_degree");
  c.mark_px = get_double(j, "mark_px", c.mark_px, "mark_px");

  const json& oj = get_object(j, "optimizer", "optimizer");
  check_keys(oj, {"weights", "min_obs", "shortlist", "repetitions", "enumeration_cutoff",
                  "beam_width", "top_sets", "permutations"},
             "optimizer");
  auto& o = c.optimizer;
  o.weights = parse_weights(get_object(oj, "weights", "optimizer.weights"), o.weights,
                            "optimizer.weights");
  auto count = [&](const char* key, std::size_t def) {
    const auto v = get_int(oj, key, static_cast<std::int64_t>(def), std::string("optimizer.") + key);
    if (v < 0) bad_type(std::string("optimizer.") + key, "non-negative");
    return static_cast<std::size_t>(v);
  };
  o.min_obs = count("min_obs", o.min_obs);
  o.shortlist = count("shortlist", o.shortlist);
  o.repetitions = static_cast<int>(count("repetitions", static_cast<std::size_t>(o.repetitions)));
  o.enumeration_cutoff = count("enumeration_cutoff", o.enumeration_cutoff);
  o.beam_width = count("beam_width", o.beam_width);
  o.top_sets = count("top_sets", o.top_sets);
  o.permutations = count("permutations", o.permutations);

  if (const json* rules = find(j, "auto_encoding")) {
    if (!rules->is_array()) bad_type("auto_encoding", "an array");
    c.auto_encoding.clear();
    for (std::size_t i = 0; i < rules->size(); ++i) {
      const auto f = "auto_encoding[" + std::to_string(i) + "]";
      const json& r = (*rules)[i];
      if (!r.is_object()) bad_type(f, "an object");
      check_keys(r, {"min_n", "max_n", "encoding", "note"}, f);
      AutoEncodingRule rule;
      rule.min_n = static_cast<int>(get_int(r, "min_n", 0, f + ".min_n"));
      rule.max_n = static_cast<int>(get_int(r, "max_n", 0, f + ".max_n"));
      rule.encoding = parse_encoding(get_string(r, "encoding", "", f + ".encoding"));
      rule.note = get_string(r, "note", "", f + ".note");
      c.auto_encoding.push_back(rule);
    }
  }

  const json& ej = get_object(j, "evidence", "evidence");
  check_keys(ej, {"trials", "synthetic_seed", "synthetic_trials_per_cell"}, "evidence");
  if (const json* t = find(ej, "trials")) {
    if (!t->is_string()) bad_type("evidence.trials", "a path");
    std::filesystem::path p = t->get<std::string>();
    c.trials = p.is_relative() ? base_dir / p : p;
  }
  c.synthetic_seed = get_seed(ej, "synthetic_seed", c.synthetic_seed, "evidence.synthetic_seed");
  const auto per_cell = get_int(ej, "synthetic_trials_per_cell", c.synthetic_trials_per_cell,
                                "evidence.synthetic_trials_per_cell");
  check_range(per_cell, 1, 1000000, "evidence.synthetic_trials_per_cell");
  c.synthetic_trials_per_cell = static_cast<std::uint32_t>(per_cell);

  const json& sj = get_object(j, "sessions", "sessions");
  check_keys(sj, {"ttl_seconds"}, "sessions");
  c.session_ttl_seconds =
      static_cast<int>(get_int(sj, "ttl_seconds", c.session_ttl_seconds, "sessions.ttl_seconds"));

  c.validate();
  return c;
}

std::string format_config(const ServiceConfig& c) {
  json j;
  j["version"] = kSchemaVersion;
  auto axis = [](const JndAxis& a) { return json{{"slope", a.slope}, {"intercept", a.intercept}}; };
  j["jnd"] = {{"profile", c.jnd.profile},
              {"L", axis(c.jnd.L)},
              {"a", axis(c.jnd.a)},
              {"b", axis(c.jnd.b)},
              {"p", c.jnd.p},
              {"pixels_per_degree", c.jnd.pixels_per_degree}};
  j["mark_px"] = c.mark_px;
  const auto& o = c.optimizer;
  j["optimizer"] = {{"weights", weights_json(o.weights)},
                    {"min_obs", o.min_obs},
                    {"shortlist", o.shortlist},
                    {"repetitions", o.repetitions},
                    {"enumeration_cutoff", o.enumeration_cutoff},
                    {"beam_width", o.beam_width},
                    {"top_sets", o.top_sets},
                    {"permutations", o.permutations}};
  json rules = json::array();
  for (const auto& r : c.auto_encoding)
    rules.push_back({{"min_n", r.min_n},
                     {"max_n", r.max_n},
                     {"encoding", encoding_name(r.encoding)},
                     {"note", r.note}});
  j["auto_encoding"] = rules;
  j["evidence"] = {{"trials", c.trials ? json(c.trials->string()) : json(nullptr)},
                   {"synthetic_seed", c.synthetic_seed},
                   {"synthetic_trials_per_cell", c.synthetic_trials_per_cell}};
  j["sessions"] = {{"ttl_seconds", c.session_ttl_seconds}};
  return dump(j);
}

std::filesystem::path data_dir_from_env(const std::filesystem::path& fallback) {
  const char* v = std::getenv("CATPAW_DATA");
  return v && *v ? std::filesystem::path(v) : fallback;
}

// ---------------------------------------------------------------- engine

Engine::Engine(const EngineOptions& options) {
  const auto& dir = options.data_dir;
  auto cfg_path = options.config;
  if (!cfg_path && std::filesystem::exists(dir / "config.json")) cfg_path = dir / "config.json";
  config_ = cfg_path ? parse_config(read_file(*cfg_path), cfg_path->parent_path())
                     : ServiceConfig::defaults();
  if (options.trials) config_.trials = options.trials;

  pools_ = load_default_pools({dir / "colors.tsv", dir / "shapes.tsv"}, config_.jnd);
  const auto designer_path = dir / "designer_palettes.tsv";
  if (std::filesystem::exists(designer_path))
    designer_ = parse_designer_palettes(read_file(designer_path), pools_.shapes);

  if (config_.trials) {
    const auto log = ingest_trials(*config_.trials, pools_.colors.size(), pools_.shapes.size());
    evidence_ = build_evidence(log.records, pools_.colors.size(), pools_.shapes.size());
    evidence_source_ = config_.trials->string();
  } else {
    evidence_ = synthetic_evidence(pools_.colors, pools_.shapes, config_.synthetic_seed,
                                   config_.synthetic_trials_per_cell);
    evidence_source_ = "synthetic";
  }
}

Model Engine::model() const {
  return Model{&pools_.colors, &pools_.shapes, &evidence_, config_.optimizer};
}

std::string Engine::colors_json() const {
  json j;
  j["version"] = kSchemaVersion;
  json arr = json::array();
  for (const auto& c : pools_.colors.entries()) {
    arr.push_back({{"id", c.id},
                   {"hex", c.hex},
                   {"lab", {c.lab.L, c.lab.a, c.lab.b}},
                   {"name", c.display_name},
                   {"manual", c.manual}});
  }
  j["colors"] = arr;
  return dump(j);
}

std::string Engine::shapes_json() const {
  json j;
  j["version"] = kSchemaVersion;
  json arr = json::array();
  for (const auto& s : pools_.shapes.entries()) {
    arr.push_back({{"id", s.id},
                   {"name", s.name},
                   {"fill_class", fill_class_name(s.fill_class)},
                   {"path", s.path},
                   {"source_tool", s.source_tool}});
  }
  j["shapes"] = arr;
  return dump(j);
}

std::string Engine::matrix_json(std::string_view axis_s, std::string_view bin_s) const {
  const Axis axis = parse_axis(axis_s);
  const BinSelector bin = parse_bin(bin_s);
  const auto& m = evidence_.matrix(axis, bin);
  json j;
  j["version"] = kSchemaVersion;
  j["axis"] = axis_name(axis);
  j["bin"] = bin_name(bin);
  j["n"] = m.n();
  j["evidence"] = evidence_source_;
  json cells = json::array();
  for (const auto& c : m.present_cells()) {
    cells.push_back(
        {{"i", c.i}, {"j", c.j}, {"acc", c.acc()}, {"correct", c.correct}, {"trials", c.trials}});
  }
  j["cells"] = std::move(cells);
  return dump(j);
}

std::string Engine::matrix_table(std::string_view axis, std::string_view bin) const {
  return format_matrix_table(evidence_.matrix(parse_axis(axis), parse_bin(bin)));
}

std::string Engine::auto_encoding_json(int n) const {
  const auto choice = config_.resolve_auto(n);
  json j;
  j["version"] = kSchemaVersion;
  j["n"] = n;
  j["encoding"] = encoding_name(choice.encoding);
  j["note"] = choice.note.empty() ? json(nullptr) : json(choice.note);
  return dump(j);
}

std::string Engine::generate(std::string_view body) const {
  const json j = parse_body(body);
  check_keys(j, {"version", "encoding", "type", "n", "k", "seed", "weights", "constraints"}, "");
  const auto n = get_int(j, "n", -1, "n");
  if (!find(j, "n")) throw Error(ErrorCode::InvalidArgument, "'n' is required", "n");
  check_range(n, 2, 10, "n");
  const auto k = get_int(j, "k", 5, "k");
  check_range(k, 1, 100, "k");
  const auto seed = get_seed(j, "seed", 1, "seed");
  std::string requested = get_string(j, "encoding", get_string(j, "type", "auto", "type"), "encoding");
  std::transform(requested.begin(), requested.end(), requested.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });

  Encoding encoding;
  std::string note;
  if (requested == "auto") {
    const auto choice = config_.resolve_auto(static_cast<int>(n));
    encoding = choice.encoding;
    note = choice.note;
  } else {
    try {
      encoding = parse_encoding(requested);
    } catch (const Error& e) {
      throw Error(e.code(), e.what(), "encoding");
    }
  }

  std::vector<std::pair<std::string, ColorId>> mapped;
  const Refs refs{&pools_, &mapped};
  const Constraints constraints =
      parse_constraints(get_object(j, "constraints", "constraints"), refs);
  Model m = model();
  if (find(j, "weights"))
    m.config.weights = parse_weights(get_object(j, "weights", "weights"), m.config.weights, "weights");

  const auto palettes = in_request([&] {
    return catpaw::generate(encoding, static_cast<std::size_t>(n), constraints,
                            static_cast<std::size_t>(k), seed, m);
  });
  json out;
  out["version"] = kSchemaVersion;
  out["request"] = {{"encoding", requested}, {"n", n}, {"k", k}, {"seed", seed}};
  out["encoding"] = encoding_name(encoding);
  out["note"] = note.empty() ? json(nullptr) : json(note);
  json mj = json::array();
  for (const auto& [hex, id] : mapped)
    mj.push_back({{"input", hex}, {"color", color_json(pools_.colors.at(id))}});
  out["mapped"] = mj;
  out["constraints"] = constraints_json(constraints);
  json arr = json::array();
  for (const auto& sp : palettes) arr.push_back(scored_json(sp, pools_));
  out["palettes"] = arr;
  return dump(out);
}

std::string Engine::swap(std::string_view body) const {
  const json j = parse_body(body);
  check_keys(j, {"version", "palette", "position", "channel", "constraints", "weights", "rank"}, "");
  const Refs refs{&pools_, nullptr};
  const json* pj = find(j, "palette");
  if (!pj) throw Error(ErrorCode::InvalidArgument, "'palette' is required", "palette");
  const Palette palette = parse_palette(*pj, refs, "palette", pools_);
  const auto position = get_int(j, "position", -1, "position");
  check_range(position, 0, static_cast<std::int64_t>(palette.n()) - 1, "position");

  SwapChannel channel;
  const std::string default_channel =
      palette.encoding == Encoding::ShapeOnly ? "shape"
      : palette.encoding == Encoding::ColorOnly ? "color" : "";
  const auto ch = get_string(j, "channel", default_channel, "channel");
  if (ch == "color") channel = SwapChannel::Color;
  else if (ch == "shape") channel = SwapChannel::Shape;
  else if (ch.empty())
    throw Error(ErrorCode::InvalidArgument, "'channel' is required for redundant palettes", "channel");
  else
    throw Error(ErrorCode::InvalidArgument, "channel must be 'color' or 'shape'", "channel");

  Constraints constraints = parse_constraints(get_object(j, "constraints", "constraints"), refs);
  Model m = model();
  if (find(j, "weights"))
    m.config.weights = parse_weights(get_object(j, "weights", "weights"), m.config.weights, "weights");

  ScoredPalette current;
  current.palette = palette;
  current.rank = static_cast<int>(get_int(j, "rank", 1, "rank"));
  const auto before = palette.entries[static_cast<std::size_t>(position)];
  ScoredPalette next = in_request([&] {
    return swap_element(current, static_cast<std::size_t>(position), channel, constraints, m);
  });
  next.rank = current.rank;
  const auto after = next.palette.entries[static_cast<std::size_t>(position)];

  json out;
  out["version"] = kSchemaVersion;
  out["position"] = position;
  out["channel"] = ch;
  if (channel == SwapChannel::Color)
    out["replaced"] = {{"from", color_json(pools_.colors.at(*before.color))},
                       {"to", color_json(pools_.colors.at(*after.color))}};
  else
    out["replaced"] = {{"from", shape_json(pools_.shapes.at(*before.shape))},
                       {"to", shape_json(pools_.shapes.at(*after.shape))}};
  out["constraints"] = constraints_json(constraints);
  out["palette"] = scored_json(next, pools_);
  return dump(out);
}

std::string Engine::preview_svg(std::string_view body) const {
  const json j = parse_body(body);
  check_keys(j, {"version", "palette", "n", "seed", "engagement"}, "");
  const Refs refs{&pools_, nullptr};
  const json* pj = find(j, "palette");
  if (!pj) throw Error(ErrorCode::InvalidArgument, "'palette' is required", "palette");
  Palette p = parse_palette(*pj, refs, "palette", pools_);
  const auto n = get_int(j, "n", static_cast<std::int64_t>(p.n()), "n");
  check_range(n, 2, static_cast<std::int64_t>(p.n()), "n");
  p.entries.resize(static_cast<std::size_t>(n));
  StimulusSpec spec;
  spec.n = static_cast<int>(n);
  spec.seed = get_seed(j, "seed", 1, "seed");
  const auto styles = mark_styles(p, pools_.colors, pools_.shapes);
  const bool engagement = get_bool(j, "engagement", false, "engagement");
  const auto s = engagement ? gen_engagement_check(spec, styles) : gen_stimulus(spec, styles);
  return render_svg(s, pools_.shapes);
}

std::string Engine::plan(std::string_view experiment, std::uint64_t seed) const {
  const PlanSources src{&pools_.colors, &pools_.shapes, &designer_};
  return format_plan(build_plan(parse_experiment(experiment), seed, src));
}

void Engine::render_plan(std::string_view experiment, std::uint64_t seed,
                         const std::filesystem::path& out_dir) const {
  const PlanSources src{&pools_.colors, &pools_.shapes, &designer_};
  const auto plan = build_plan(parse_experiment(experiment), seed, src);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + out_dir.string() + ": " + ec.message(), "out_dir");
  write_file(out_dir / "manifest.tsv", format_plan(plan));
  char name[64];
  for (const auto& d : plan.designs) {
    StimulusSpec spec;
    spec.n = d.n;
    spec.seed = d.seed;
    const auto styles = design_styles(d, pools_.shapes);
    std::snprintf(name, sizeof name, "design_%04zu.svg", d.index);
    write_file(out_dir / name, render_svg(gen_stimulus(spec, styles), pools_.shapes));
  }
  for (std::size_t i = 0; i < plan.engagement.size(); ++i) {
    const auto& e = plan.engagement[i];
    StimulusSpec spec;
    spec.n = e.n;
    spec.seed = e.seed;
    const auto styles = engagement_styles(e.n, pools_);
    std::snprintf(name, sizeof name, "engagement_%04zu.svg", i);
    write_file(out_dir / name, render_svg(gen_engagement_check(spec, styles), pools_.shapes));
  }
}

std::string Engine::ingest(const std::filesystem::path& path) const {
  const auto nc = pools_.colors.size(), ns = pools_.shapes.size();
  const auto log = ingest_trials(path, nc, ns);
  const auto ev = build_evidence(log.records, nc, ns);
  std::size_t timeouts = 0, correct = 0;
  for (const auto& t : log.records) {
    timeouts += !t.response_index.has_value();
    correct += t.correct;
  }
  json j;
  j["version"] = kSchemaVersion;
  j["source"] = path.string();
  j["records"] = log.records.size();
  j["correct"] = correct;
  j["timeouts"] = timeouts;
  j["warnings"] = log.warnings;
  json mats = json::array();
  for (Axis a : {Axis::Color, Axis::Shape, Axis::Marker}) {
    for (BinSelector b : {BinSelector::Small, BinSelector::Medium, BinSelector::Large, BinSelector::All}) {
      const auto& m = ev.matrix(a, b);
      json row = {{"axis", axis_name(a)}, {"bin", bin_name(b)}, {"cells", m.present_count()}};
      if (m.present_count()) {
        const auto s = summary_stats(m);
        row["mean"] = s.mean;
        row["min"] = s.min;
        row["max"] = s.max;
        row["stddev"] = s.stddev;
      }
      mats.push_back(row);
    }
  }
  j["matrices"] = mats;
  return dump(j);
}

std::string Engine::validate(std::string_view body, std::string* plot_svg) const {
  const json j = parse_body(body);
  check_keys(j, {"version", "trials", "samples_per_n", "repeats", "seed", "category_counts",
                 "resamples", "palettes"},
             "");
  const auto path = get_string(j, "trials", "", "trials");
  if (path.empty()) throw Error(ErrorCode::InvalidArgument, "'trials' is required", "trials");
  RankValidationOptions opt;
  opt.samples_per_n = static_cast<std::size_t>(
      std::max<std::int64_t>(1, get_int(j, "samples_per_n", 50, "samples_per_n")));
  opt.repeats = static_cast<int>(get_int(j, "repeats", 3, "repeats"));
  check_range(opt.repeats, 1, 1000, "repeats");
  opt.seed = get_seed(j, "seed", 1, "seed");
  opt.resamples = static_cast<int>(get_int(j, "resamples", 1000, "resamples"));
  check_range(opt.resamples, 1, 1000000, "resamples");
  const Refs refs{&pools_, nullptr};
  opt.category_counts = refs.list(j, "category_counts", "", [](const json& v, const std::string& f) {
    if (!v.is_number_integer()) bad_type(f, "an integer");
    const auto n = v.get<std::int64_t>();
    check_range(n, 2, 10, f);
    return static_cast<int>(n);
  });
  opt.palettes = refs.list(j, "palettes", "", [&](const json& v, const std::string& f) {
    return parse_palette(v, refs, f, pools_);
  });
  const auto log = ingest_trials(path, pools_.colors.size(), pools_.shapes.size());
  const Model m = model();
  const auto report = rank_validation(model_scorer(m), log.records, opt);
  if (plot_svg) *plot_svg = render_rank_plot(report);
  return format_rank_report(report);
}

std::string Engine::baseline(std::string_view body) const {
  const json j = parse_body(body);
  check_keys(j, {"version", "groups", "seed", "n", "k", "encoding"}, "");
  const auto seed = get_seed(j, "seed", 1, "seed");
  const Refs refs{&pools_, nullptr};
  const Model m = model();
  std::vector<PaletteGroup> groups;
  if (const json* gj = find(j, "groups")) {
    if (!gj->is_array()) bad_type("groups", "an array");
    for (std::size_t g = 0; g < gj->size(); ++g) {
      const auto f = "groups[" + std::to_string(g) + "]";
      const json& item = (*gj)[g];
      if (!item.is_object()) bad_type(f, "an object");
      check_keys(item, {"name", "palettes"}, f);
      PaletteGroup pg;
      pg.name = get_string(item, "name", "group" + std::to_string(g), f + ".name");
      pg.palettes = refs.list(item, "palettes", f, [&](const json& v, const std::string& pf) {
        return parse_palette(v, refs, pf, pools_);
      });
      if (pg.palettes.empty())
        throw Error(ErrorCode::InvalidArgument, "group has no palettes", f + ".palettes");
      groups.push_back(std::move(pg));
    }
  } else {
    // Generated top-k against the designer colour palettes cut to n and
    // mapped onto the pool.
    const auto n = get_int(j, "n", 6, "n");
    check_range(n, 2, 10, "n");
    const auto k = get_int(j, "k", 10, "k");
    check_range(k, 1, 100, "k");
    PaletteGroup gen{"generated", {}};
    for (const auto& sp : catpaw::generate(Encoding::ColorOnly, static_cast<std::size_t>(n), {},
                                           static_cast<std::size_t>(k), seed, m))
      gen.palettes.push_back(sp.palette);
    PaletteGroup des{"designer", {}};
    for (const auto& np : designer_) {
      if (!np.is_color() || np.colors.size() < static_cast<std::size_t>(n)) continue;
      Palette p{Encoding::ColorOnly, {}};
      std::set<ColorId> seen;
      for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
        const auto id = nearest_representative(srgb_to_lab(parse_hex(np.colors[i])), pools_.colors);
        if (seen.insert(id).second) p.entries.push_back({id, std::nullopt});
      }
      if (p.n() == static_cast<std::size_t>(n)) des.palettes.push_back(std::move(p));
    }
    groups.push_back(std::move(gen));
    if (!des.palettes.empty()) groups.push_back(std::move(des));
  }
  return format_baseline_report(baseline_report(groups, model_scorer(m), seed));
}

std::string Engine::synth_trials(std::string_view body) const {
  const json j = parse_body(body);
  check_keys(j, {"version", "seed", "trials", "timeout_rate", "group_size", "encodings"}, "");
  SyntheticTrialSpec spec;
  spec.seed = get_seed(j, "seed", spec.seed, "seed");
  const auto trials = get_int(j, "trials", static_cast<std::int64_t>(spec.trials), "trials");
  check_range(trials, 1, 10000000, "trials");
  spec.trials = static_cast<std::size_t>(trials);
  spec.timeout_rate = get_double(j, "timeout_rate", spec.timeout_rate, "timeout_rate");
  if (!(spec.timeout_rate >= 0 && spec.timeout_rate < 1))
    throw Error(ErrorCode::InvalidArgument, "timeout_rate must lie in [0, 1)", "timeout_rate");
  const auto group = get_int(j, "group_size", static_cast<std::int64_t>(spec.group_size), "group_size");
  check_range(group, 1, 1000000, "group_size");
  spec.group_size = static_cast<std::size_t>(group);
  if (const json* e = find(j, "encodings")) {
    if (!e->is_array() || e->empty()) bad_type("encodings", "a non-empty array");
    spec.color_only = spec.shape_only = spec.redundant = false;
    for (const auto& v : *e) {
      if (!v.is_string()) bad_type("encodings", "an array of encoding names");
      switch (parse_encoding(v.get<std::string>())) {
        case Encoding::ColorOnly: spec.color_only = true; break;
        case Encoding::ShapeOnly: spec.shape_only = true; break;
        case Encoding::Redundant: spec.redundant = true; break;
      }
    }
  }
  return format_trials(synthetic_trials(pools_.colors, pools_.shapes, spec));
}

std::string derive_pool_file(std::string_view body) {
  const json j = parse_body(body);
  check_keys(j, {"version", "k", "seed", "manual", "mark_px"}, "");
  const auto k = get_int(j, "k", static_cast<std::int64_t>(kPoolCentroids), "k");
  check_range(k, 2, 5000, "k");
  const auto seed = get_seed(j, "seed", kPoolSeed, "seed");
  const double mark = get_double(j, "mark_px", kDefaultMarkPx, "mark_px");
  const bool manual = get_bool(j, "manual", true, "manual");
  const JndParams jnd;
  const auto d = derive_pool(GridSpec{}, static_cast<std::size_t>(k), seed, mark, jnd);
  std::span<const LabColor> extra;
  if (manual) extra = kManualPoolColors;
  return format_color_pool(assemble_pool(d.subset, extra));
}

}  // namespace catpaw
