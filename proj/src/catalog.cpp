#include "catpaw/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "catpaw/error.hpp"
#include "text_table.hpp"

namespace catpaw {

namespace {

double sq_dist(const LabColor& x, const LabColor& y) {
  const double dL = x.L - y.L;
  const double da = x.a - y.a;
  const double db = x.b - y.b;
  return dL * dL + da * da + db * db;
}

// Number of lattice values in [lo, hi] at `step`, robust to float drift.
int lattice_count(double lo, double hi, double step) {
  return static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
}

std::string fmt_fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

}  // namespace

std::string_view fill_class_name(FillClass f) {
  switch (f) {
    case FillClass::Filled: return "filled";
    case FillClass::Unfilled: return "unfilled";
    case FillClass::Open: return "open";
  }
  return "filled";
}

FillClass parse_fill_class(std::string_view s) {
  if (s == "filled") return FillClass::Filled;
  if (s == "unfilled") return FillClass::Unfilled;
  if (s == "open") return FillClass::Open;
  throw Error(ErrorCode::Parse, "unknown fill_class '" + std::string(s) + "'",
              "fill_class");
}

ColorPool::ColorPool(std::vector<ColorEntry> entries)
    : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].id != static_cast<ColorId>(i)) {
      throw Error(ErrorCode::Validation,
                  "colour ids must be unique and dense 0..n-1; entry " +
                      std::to_string(i) + " has id " +
                      std::to_string(entries_[i].id),
                  "id=" + std::to_string(entries_[i].id));
    }
  }
}

const ColorEntry& ColorPool::at(ColorId id) const {
  if (!contains(id)) {
    throw Error(ErrorCode::UnknownId, "unknown color id " + std::to_string(id),
                "color_id=" + std::to_string(id));
  }
  return entries_[static_cast<std::size_t>(id)];
}

ShapeCatalog::ShapeCatalog(std::vector<ShapeEntry> entries)
    : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].id != static_cast<ShapeId>(i)) {
      throw Error(ErrorCode::Validation,
                  "shape ids must be unique and dense 0..n-1; entry " +
                      std::to_string(i) + " has id " +
                      std::to_string(entries_[i].id),
                  "id=" + std::to_string(entries_[i].id));
    }
  }
}

const ShapeEntry& ShapeCatalog::at(ShapeId id) const {
  if (!contains(id)) {
    throw Error(ErrorCode::UnknownId, "unknown shape id " + std::to_string(id),
                "shape_id=" + std::to_string(id));
  }
  return entries_[static_cast<std::size_t>(id)];
}

std::optional<ShapeId> ShapeCatalog::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.id;
  }
  return std::nullopt;
}

void GridSpec::validate() const {
  const double steps[3] = {L_step, a_step, b_step};
  for (double s : steps) {
    if (!(s > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "grid steps must be positive",
                  "step");
    }
  }
  if (L_max < L_min || a_max < a_min || b_max < b_min) {
    throw Error(ErrorCode::InvalidArgument, "grid ranges must be non-empty",
                "range");
  }
}

std::vector<LabColor> grid_sample_lab(const GridSpec& spec) {
  spec.validate();
  const int nL = lattice_count(spec.L_min, spec.L_max, spec.L_step);
  const int na = lattice_count(spec.a_min, spec.a_max, spec.a_step);
  const int nb = lattice_count(spec.b_min, spec.b_max, spec.b_step);
  std::vector<LabColor> out;
  for (int i = 0; i < nL; ++i) {
    const double L = spec.L_min + i * spec.L_step;
    for (int j = 0; j < na; ++j) {
      const double a = spec.a_min + j * spec.a_step;
      for (int k = 0; k < nb; ++k) {
        const LabColor c{L, a, spec.b_min + k * spec.b_step};
        if (lab_to_srgb(c).in_gamut) out.push_back(c);
      }
    }
  }
  return out;
}

KMeansResult kmeans_lab_detailed(std::span<const LabColor> samples,
                                 std::size_t k, std::uint64_t seed) {
  const std::size_t n = samples.size();
  if (n == 0) {
    throw Error(ErrorCode::InvalidArgument, "k-means needs samples", "samples");
  }
  if (k < 1 || k > n) {
    throw Error(ErrorCode::InvalidArgument,
                "k must lie in [1, " + std::to_string(n) + "], got " +
                    std::to_string(k),
                "k");
  }
  std::mt19937_64 rng(seed);

  // k-means++ seeding.
  std::vector<LabColor> centers;
  centers.reserve(k);
  std::vector<char> chosen(n, 0);
  {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const std::size_t first = pick(rng);
    centers.push_back(samples[first]);
    chosen[first] = 1;
  }
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(samples[i], centers[0]);
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += chosen[i] ? 0.0 : d2[i];
    std::size_t next = n;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i] || d2[i] <= 0.0) continue;
        target -= d2[i];
        if (target <= 0.0) {
          next = i;
          break;
        }
      }
      if (next == n) {
        for (std::size_t i = n; i-- > 0;) {
          if (!chosen[i] && d2[i] > 0.0) {
            next = i;
            break;
          }
        }
      }
    } else {
      // Every remaining sample coincides with a centre.
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) {
          next = i;
          break;
        }
      }
    }
    chosen[next] = 1;
    centers.push_back(samples[next]);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(samples[i], centers.back()));
    }
  }

  KMeansResult result;
  result.labels.assign(n, 0);
  double prev_inertia = std::numeric_limits<double>::infinity();
  std::vector<double> sums(3 * k);
  std::vector<std::size_t> counts(k);
  std::vector<double> best_d(n);
  constexpr int kMaxIterations = 200;
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = sq_dist(samples[i], centers[c]);
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      result.labels[i] = arg;
      best_d[i] = best;
      inertia += best;
    }
    result.inertia_history.push_back(inertia);
    result.iterations = iter + 1;

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = result.labels[i];
      sums[3 * c] += samples[i].L;
      sums[3 * c + 1] += samples[i].a;
      sums[3 * c + 2] += samples[i].b;
      ++counts[c];
    }
    std::vector<char> taken(n, 0);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        const double m = static_cast<double>(counts[c]);
        centers[c] = {sums[3 * c] / m, sums[3 * c + 1] / m, sums[3 * c + 2] / m};
        continue;
      }
      // Empty cluster: move it onto the worst-served sample. This can only
      // lower the assignment cost on the next pass.
      std::size_t worst = 0;
      double worst_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i] && best_d[i] > worst_d) {
          worst_d = best_d[i];
          worst = i;
        }
      }
      taken[worst] = 1;
      best_d[worst] = 0.0;
      centers[c] = samples[worst];
    }
    const bool converged =
        std::isfinite(prev_inertia) &&
        (prev_inertia == 0.0 ||
         (prev_inertia - inertia) / prev_inertia < 1e-6);
    prev_inertia = inertia;
    if (converged) break;
  }

  // Final assignment against the last centres, then snap.
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double d = sq_dist(samples[i], centers[c]);
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    result.labels[i] = arg;
  }
  result.centroids.resize(k);
  std::vector<double> snap_d(k, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> snap_i(k, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = result.labels[i];
    const double d = sq_dist(samples[i], centers[c]);
    if (d < snap_d[c]) {
      snap_d[c] = d;
      snap_i[c] = i;
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    result.centroids[c] = snap_i[c] < n ? samples[snap_i[c]] : centers[c];
  }
  return result;
}

std::vector<LabColor> kmeans_lab(std::span<const LabColor> samples,
                                 std::size_t k, std::uint64_t seed) {
  return kmeans_lab_detailed(samples, k, seed).centroids;
}

std::vector<LabColor> max_jnd_subset(std::span<const LabColor> colors,
                                     double mark_size_px,
                                     const JndParams& params) {
  params.validate();
  const JndThresholds t = jnd_thresholds(mark_size_px, params);
  const std::size_t n = colors.size();
  if (n == 0) return {};
  auto disc = [&](std::size_t i, std::size_t j) {
    return std::abs(colors[i].L - colors[j].L) > t.L ||
           std::abs(colors[i].a - colors[j].a) > t.a ||
           std::abs(colors[i].b - colors[j].b) > t.b;
  };
  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  std::vector<std::size_t> degree(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (disc(i, j)) {
        adj[i][j] = adj[j][i] = 1;
        ++degree[i];
        ++degree[j];
      }
    }
  }
  std::vector<char> alive(n, 1);
  std::size_t remaining = n;
  while (true) {
    std::size_t worst = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (alive[i] && (worst == n || degree[i] < degree[worst])) worst = i;
    }
    if (degree[worst] + 1 == remaining) break;
    alive[worst] = 0;
    --remaining;
    for (std::size_t j = 0; j < n; ++j) {
      if (alive[j] && adj[worst][j]) --degree[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (alive[i]) continue;
    bool fits = true;
    for (std::size_t j = 0; j < n && fits; ++j) {
      if (alive[j] && !adj[i][j]) fits = false;
    }
    if (fits) alive[i] = 1;
  }
  std::vector<LabColor> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (alive[i]) out.push_back(colors[i]);
  }
  return out;
}

PoolDerivation derive_pool(const GridSpec& spec, std::size_t k,
                           std::uint64_t seed, double mark_size_px,
                           const JndParams& params) {
  PoolDerivation d;
  const auto grid = grid_sample_lab(spec);
  d.grid_size = grid.size();
  d.centroids = kmeans_lab(grid, k, seed);
  d.subset = max_jnd_subset(d.centroids, mark_size_px, params);
  std::stable_sort(d.subset.begin(), d.subset.end(),
                   [](const LabColor& x, const LabColor& y) {
                     const LchColor a = lab_to_lch(x);
                     const LchColor b = lab_to_lch(y);
                     const bool ga = a.C < 10.0, gb = b.C < 10.0;
                     if (ga != gb) return gb;  // greys last
                     if (ga) return x.L < y.L;
                     if (a.h != b.h) return a.h < b.h;
                     return x.L < y.L;
                   });
  return d;
}

std::string describe_color(LabColor lab) {
  const LchColor c = lab_to_lch(lab);
  std::string tone;
  if (lab.L < 40.0) tone = "dark ";
  else if (lab.L > 75.0) tone = "light ";
  if (c.C < 10.0) return tone + "grey";
  static const struct {
    double upto;
    const char* name;
  } kHues[] = {{20, "pink"},    {45, "red"},     {70, "orange"},
               {100, "yellow"}, {135, "lime"},   {165, "green"},
               {210, "teal"},   {250, "cyan"},   {290, "blue"},
               {320, "violet"}, {345, "purple"}, {360, "pink"}};
  const char* hue = "pink";
  for (const auto& h : kHues) {
    if (c.h < h.upto) {
      hue = h.name;
      break;
    }
  }
  if (c.C < 25.0) tone += "muted ";
  return tone + hue;
}

ColorEntry make_color_entry(ColorId id, LabColor lab, bool manual) {
  ColorEntry e;
  e.id = id;
  e.lab = lab;
  e.hex = format_hex(lab_to_srgb(lab).rgb);
  e.display_name = describe_color(lab);
  e.manual = manual;
  return e;
}

ColorPool assemble_pool(std::span<const LabColor> subset,
                        std::span<const LabColor> manual) {
  std::vector<ColorEntry> entries;
  for (const auto& c : subset)
    entries.push_back(make_color_entry(static_cast<ColorId>(entries.size()), c, false));
  for (const auto& c : manual)
    entries.push_back(make_color_entry(static_cast<ColorId>(entries.size()), c, true));
  return ColorPool(std::move(entries));
}

void validate_color_pool(const ColorPool& pool, double mark_size_px,
                         const JndParams& params,
                         std::optional<std::size_t> expected_size) {
  if (expected_size && pool.size() != *expected_size) {
    throw Error(ErrorCode::Validation,
                "colour pool has " + std::to_string(pool.size()) +
                    " entries, expected " + std::to_string(*expected_size),
                "entries");
  }
  if (pool.size() == 0) {
    throw Error(ErrorCode::Validation, "colour pool is empty", "entries");
  }
  const LabColor white{100.0, 0.0, 0.0};
  const auto& e = pool.entries();
  for (const auto& c : e) {
    const std::string who = "color_id=" + std::to_string(c.id);
    if (c.lab.L < kMinPoolLightness) {
      throw Error(ErrorCode::Validation,
                  "colour " + std::to_string(c.id) + " has L < 25", who);
    }
    const GamutResult g = lab_to_srgb(c.lab);
    if (!g.in_gamut) {
      throw Error(ErrorCode::Validation,
                  "colour " + std::to_string(c.id) + " lies outside sRGB", who);
    }
    const RgbColor hex = parse_hex(c.hex);
    if (std::abs(int(hex.r) - int(g.rgb.r)) > 1 ||
        std::abs(int(hex.g) - int(g.rgb.g)) > 1 ||
        std::abs(int(hex.b) - int(g.rgb.b)) > 1) {
      throw Error(ErrorCode::Validation,
                  "colour " + std::to_string(c.id) + " hex " + c.hex +
                      " disagrees with its Lab value",
                  who);
    }
    if (!jnd_discriminable(c.lab, white, mark_size_px, params)) {
      throw Error(ErrorCode::Validation,
                  "colour " + std::to_string(c.id) +
                      " is not discriminable from the white background",
                  who);
    }
  }
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (std::size_t j = i + 1; j < e.size(); ++j) {
      if (!jnd_discriminable(e[i].lab, e[j].lab, mark_size_px, params)) {
        throw Error(ErrorCode::Validation,
                    "colours " + std::to_string(e[i].id) + " and " +
                        std::to_string(e[j].id) +
                        " are not JND-discriminable",
                    "color_id=" + std::to_string(e[j].id));
      }
    }
  }
}

void validate_shape_catalog(const ShapeCatalog& catalog,
                            std::optional<std::size_t> expected_size) {
  if (expected_size && catalog.size() != *expected_size) {
    throw Error(ErrorCode::Validation,
                "shape catalog has " + std::to_string(catalog.size()) +
                    " entries, expected " + std::to_string(*expected_size),
                "entries");
  }
  if (catalog.size() == 0) {
    throw Error(ErrorCode::Validation, "shape catalog is empty", "entries");
  }
  std::set<std::string> names;
  for (const auto& s : catalog.entries()) {
    const std::string who = "shape_id=" + std::to_string(s.id);
    if (s.name.empty() || s.path.empty()) {
      throw Error(ErrorCode::Validation,
                  "shape " + std::to_string(s.id) + " lacks a name or path",
                  who);
    }
    if (!names.insert(s.name).second) {
      throw Error(ErrorCode::Validation, "duplicate shape name " + s.name, who);
    }
  }
}

ColorPool parse_color_pool(std::string_view text) {
  const auto table = detail::parse_table(
      text, "catpaw-colors", 1,
      {"id", "hex", "L", "a", "b", "display_name", "manual"});
  std::vector<ColorEntry> entries;
  std::set<int> seen;
  for (const auto& row : table.rows) {
    ColorEntry e;
    e.id = detail::parse_int(row.fields[0], row.line, "id");
    if (!seen.insert(e.id).second) {
      throw Error(ErrorCode::Validation,
                  "line " + std::to_string(row.line) + ": duplicate color id " +
                      std::to_string(e.id),
                  "id=" + std::to_string(e.id));
    }
    e.hex = std::string(row.fields[1]);
    parse_hex(e.hex);
    e.lab = {detail::parse_double(row.fields[2], row.line, "L"),
             detail::parse_double(row.fields[3], row.line, "a"),
             detail::parse_double(row.fields[4], row.line, "b")};
    e.display_name = std::string(row.fields[5]);
    const auto manual = row.fields[6];
    if (manual == "true") e.manual = true;
    else if (manual == "false") e.manual = false;
    else {
      throw Error(ErrorCode::Parse,
                  "line " + std::to_string(row.line) +
                      ": manual must be true or false",
                  "manual");
    }
    entries.push_back(std::move(e));
  }
  std::sort(entries.begin(), entries.end(),
            [](const ColorEntry& x, const ColorEntry& y) { return x.id < y.id; });
  return ColorPool(std::move(entries));
}

ShapeCatalog parse_shape_catalog(std::string_view text) {
  const auto table = detail::parse_table(
      text, "catpaw-shapes", 1,
      {"id", "name", "fill_class", "path", "source_tool"});
  std::vector<ShapeEntry> entries;
  std::set<int> seen;
  for (const auto& row : table.rows) {
    ShapeEntry e;
    e.id = detail::parse_int(row.fields[0], row.line, "id");
    if (!seen.insert(e.id).second) {
      throw Error(ErrorCode::Validation,
                  "line " + std::to_string(row.line) + ": duplicate shape id " +
                      std::to_string(e.id),
                  "id=" + std::to_string(e.id));
    }
    e.name = std::string(row.fields[1]);
    try {
      e.fill_class = parse_fill_class(row.fields[2]);
    } catch (const Error& err) {
      throw Error(ErrorCode::Parse,
                  "line " + std::to_string(row.line) + ": " + err.what(),
                  "fill_class");
    }
    e.path = std::string(row.fields[3]);
    e.source_tool = std::string(row.fields[4]);
    entries.push_back(std::move(e));
  }
  std::sort(entries.begin(), entries.end(),
            [](const ShapeEntry& x, const ShapeEntry& y) { return x.id < y.id; });
  return ShapeCatalog(std::move(entries));
}

std::string format_color_pool(const ColorPool& pool) {
  std::string out = "# catpaw-colors 1\nid\thex\tL\ta\tb\tdisplay_name\tmanual\n";
  for (const auto& e : pool.entries()) {
    out += std::to_string(e.id) + "\t" + e.hex + "\t" + fmt_fixed(e.lab.L, 4) +
           "\t" + fmt_fixed(e.lab.a, 4) + "\t" + fmt_fixed(e.lab.b, 4) + "\t" +
           e.display_name + "\t" + (e.manual ? "true" : "false") + "\n";
  }
  return out;
}

std::string format_shape_catalog(const ShapeCatalog& catalog) {
  std::string out = "# catpaw-shapes 1\nid\tname\tfill_class\tpath\tsource_tool\n";
  for (const auto& e : catalog.entries()) {
    out += std::to_string(e.id) + "\t" + e.name + "\t" +
           std::string(fill_class_name(e.fill_class)) + "\t" + e.path + "\t" +
           e.source_tool + "\n";
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open " + path.string(), path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Pools load_default_pools(const PoolPaths& paths, const JndParams& params,
                         std::optional<std::size_t> expected_size) {
  Pools pools;
  pools.colors = parse_color_pool(read_text_file(paths.colors));
  pools.shapes = parse_shape_catalog(read_text_file(paths.shapes));
  validate_color_pool(pools.colors, kDefaultMarkPx, params, expected_size);
  validate_shape_catalog(pools.shapes, expected_size);
  return pools;
}

std::vector<NamedPalette> parse_designer_palettes(std::string_view text,
                                                  const ShapeCatalog& catalog) {
  const auto table = detail::parse_table(text, "catpaw-designer", 1,
                                         {"name", "kind", "tool", "entries"});
  std::vector<NamedPalette> out;
  for (const auto& row : table.rows) {
    const std::string at = "line " + std::to_string(row.line) + ": ";
    NamedPalette p;
    p.name = std::string(row.fields[0]);
    p.tool = std::string(row.fields[2]);
    for (const auto& q : out) {
      if (q.name == p.name) {
        throw Error(ErrorCode::Validation, at + "duplicate palette " + p.name,
                    "name=" + p.name);
      }
    }
    const auto kind = row.fields[1];
    for (auto item : detail::split(row.fields[3], ',')) {
      item = detail::trim(item);
      if (kind == "color") {
        try {
          p.colors.push_back(format_hex(parse_hex(item)));
        } catch (const Error& e) {
          throw Error(ErrorCode::Parse, at + e.what(), "entries");
        }
      } else if (kind == "shape") {
        const auto id = catalog.find(item);
        if (!id) {
          throw Error(ErrorCode::UnknownId, at + "unknown shape '" +
                                                std::string(item) + "'",
                      "shape=" + std::string(item));
        }
        p.shapes.push_back(*id);
      } else {
        throw Error(ErrorCode::Parse,
                    at + "kind must be color or shape, got '" +
                        std::string(kind) + "'",
                    "kind");
      }
    }
    if (p.colors.size() + p.shapes.size() < 2) {
      throw Error(ErrorCode::Validation, at + "palette " + p.name +
                                             " needs at least two entries",
                  "entries");
    }
    out.push_back(std::move(p));
  }
  return out;
}

const NamedPalette& find_palette(const std::vector<NamedPalette>& palettes,
                                 std::string_view name) {
  for (const auto& p : palettes) {
    if (p.name == name) return p;
  }
  throw Error(ErrorCode::UnknownId,
              "no designer palette named '" + std::string(name) + "'",
              "palette=" + std::string(name));
}

}  // namespace catpaw
