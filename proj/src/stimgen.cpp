#include "catpaw/stimgen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "catpaw/error.hpp"
#include "seeds.hpp"

namespace catpaw {

namespace {

constexpr int kPointAttempts = 1000;
constexpr int kStimulusAttempts = 100;
constexpr int kJitterPasses = 400;
constexpr double kDistractorFloor = -0.2;
constexpr double kEngagementGap = 0.4;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::vector<Point> draw_bivariate(double r, std::size_t count,
                                  std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  const double c = std::sqrt(1.0 - r * r);
  std::vector<Point> pts(count);
  for (auto& p : pts) {
    const double a = z(rng);
    const double b = z(rng);
    p = {a, r * a + c * b};
  }
  return pts;
}

struct Canvas {
  double lo;  // centre bounds for a mark
  double hi;
  double mark;
};

bool overlaps(const Point& a, const Point& b, double mark) {
  return std::abs(a.x - b.x) < mark && std::abs(a.y - b.y) < mark;
}

// Overlap count and total intersection area of point i at `at`.
std::pair<int, double> overlap_cost(const std::vector<Point>& px, std::size_t i,
                                    Point at, double mark) {
  int count = 0;
  double area = 0.0;
  for (std::size_t j = 0; j < px.size(); ++j) {
    if (j == i) continue;
    const double dx = mark - std::abs(at.x - px[j].x);
    const double dy = mark - std::abs(at.y - px[j].y);
    if (dx > 0.0 && dy > 0.0) {
      ++count;
      area += dx * dy;
    }
  }
  return {count, area};
}

// Candidate nudges: rings of radius 0.5..2 px, 8 directions per ring step.
const std::vector<Point>& spiral() {
  static const std::vector<Point> offsets = [] {
    std::vector<Point> v;
    for (int ring = 1; ring <= 4; ++ring) {
      const double radius = 0.5 * ring;
      const int steps = 8 * ring;
      for (int k = 0; k < steps; ++k) {
        const double t = 2.0 * std::numbers::pi * k / steps;
        v.push_back({radius * std::cos(t), radius * std::sin(t)});
      }
    }
    return v;
  }();
  return offsets;
}

bool resolve_overlaps(std::vector<Point>& px, const Canvas& cv) {
  for (int pass = 0; pass < kJitterPasses; ++pass) {
    bool any = false;
    for (std::size_t i = 0; i < px.size(); ++i) {
      auto best = overlap_cost(px, i, px[i], cv.mark);
      if (best.first == 0) continue;
      any = true;
      Point best_at = px[i];
      for (const Point& off : spiral()) {
        const Point at{std::clamp(px[i].x + off.x, cv.lo, cv.hi),
                       std::clamp(px[i].y + off.y, cv.lo, cv.hi)};
        const auto cost = overlap_cost(px, i, at, cv.mark);
        if (cost.first < best.first ||
            (cost.first == best.first && cost.second < best.second)) {
          best = cost;
          best_at = at;
          if (cost.first == 0) break;
        }
      }
      px[i] = best_at;
    }
    if (!any) return true;
  }
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (overlap_cost(px, i, px[i], cv.mark).first > 0) return false;
  }
  return true;
}

StimulusData generate(const StimulusSpec& spec,
                      std::span<const MarkStyle> styles, double gap) {
  spec.validate();
  if (styles.size() != static_cast<std::size_t>(spec.n)) {
    throw Error(ErrorCode::InvalidArgument,
                "palette has " + std::to_string(styles.size()) +
                    " entries but the stimulus needs " + std::to_string(spec.n),
                "palette");
  }
  const std::size_t ppc = static_cast<std::size_t>(spec.points_per_category);
  for (int attempt = 0; attempt < kStimulusAttempts; ++attempt) {
    const std::uint64_t s = detail::derive_seed(spec.seed, attempt);
    std::mt19937_64 rng(s);
    StimulusData out;
    out.spec = spec;
    out.styles.assign(styles.begin(), styles.end());
    out.target_index =
        std::uniform_int_distribution<int>(0, spec.n - 1)(rng);
    const double rt = std::uniform_real_distribution<double>(
        spec.target_r_min, spec.target_r_max)(rng);
    out.points.resize(spec.n);
    out.points[out.target_index] = gen_correlated_points(
        rt, ppc, detail::derive_seed(s, 1, out.target_index), spec.tolerance);
    const double rts = sample_correlation(out.points[out.target_index]);
    const double hi = rts - gap;
    const double lo = std::min(kDistractorFloor, hi);
    for (int k = 0; k < spec.n; ++k) {
      if (k == out.target_index) continue;
      const double rk = std::uniform_real_distribution<double>(lo, hi)(rng);
      out.points[k] = gen_correlated_points(
          rk, ppc, detail::derive_seed(s, 1, k), spec.tolerance);
    }

    double dmin = std::numeric_limits<double>::infinity();
    double dmax = -dmin;
    for (const auto& cat : out.points) {
      for (const auto& p : cat) {
        dmin = std::min({dmin, p.x, p.y});
        dmax = std::max({dmax, p.x, p.y});
      }
    }
    out.map.x0 = dmin;
    out.map.y0 = dmin;
    out.map.origin_px = spec.margin_px;
    out.map.extent_px = spec.plot_px - spec.margin_px;
    out.map.scale = (out.map.extent_px - out.map.origin_px) / (dmax - dmin);

    std::vector<Point> px;
    for (const auto& cat : out.points) {
      for (const auto& p : cat) px.push_back(out.map.to_px(p));
    }
    const Canvas cv{spec.mark_px / 2.0, spec.plot_px - spec.mark_px / 2.0,
                    spec.mark_px};
    if (!resolve_overlaps(px, cv)) continue;
    std::size_t at = 0;
    for (auto& cat : out.points) {
      for (auto& p : cat) p = out.map.to_data(px[at++]);
    }
    out.r.clear();
    for (const auto& cat : out.points) out.r.push_back(sample_correlation(cat));
    if (verify_stimulus(out, gap)) continue;
    return out;
  }
  throw Error(ErrorCode::GenerationFailure,
              "no stimulus with n=" + std::to_string(spec.n) +
                  " met the correlation and overlap constraints after " +
                  std::to_string(kStimulusAttempts) + " attempts",
              "seed");
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

double sample_correlation(std::span<const Point> pts) {
  if (pts.size() < 2) {
    throw Error(ErrorCode::UndefinedCorrelation,
                "correlation needs at least two points", "points");
  }
  double mx = 0.0, my = 0.0;
  for (const auto& p : pts) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& p : pts) {
    sxx += (p.x - mx) * (p.x - mx);
    syy += (p.y - my) * (p.y - my);
    sxy += (p.x - mx) * (p.y - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    throw Error(ErrorCode::UndefinedCorrelation,
                "correlation is undefined for zero variance", "points");
  }
  return sxy / std::sqrt(sxx * syy);
}

void StimulusSpec::validate() const {
  auto bad = [](const std::string& what, const std::string& field) {
    throw Error(ErrorCode::InvalidArgument, what, field);
  };
  if (n < kMinCategories || n > kMaxCategories) bad("n must be in [2, 10]", "n");
  if (points_per_category < 3) bad("need at least 3 points per category", "points_per_category");
  if (!(target_r_min > -1.0 && target_r_max < 1.0 && target_r_min <= target_r_max)) {
    bad("target range must lie within (-1, 1)", "target_r_range");
  }
  if (!(runner_up_gap > 0.0)) bad("runner-up gap must be positive", "runner_up_gap");
  if (!(tolerance >= 0.0)) bad("tolerance must be non-negative", "tolerance");
  if (!(mark_px > 0.0) || !(plot_px > 2.0 * margin_px) || margin_px < 0.0) {
    bad("plot geometry is inconsistent", "plot_px");
  }
  if (ticks_per_axis < 2) bad("need at least two ticks", "ticks_per_axis");
}

std::vector<MarkStyle> mark_styles(const Palette& p, const ColorPool& colors,
                                   const ShapeCatalog& shapes) {
  validate_palette(p, colors.size(), shapes.size());
  const ShapeId circle = shapes.find("circle").value_or(0);
  std::vector<MarkStyle> out;
  for (const auto& m : p.entries) {
    MarkStyle s;
    s.hex = m.color ? colors.at(*m.color).hex : std::string(kShapeOnlyHex);
    s.shape = m.shape ? *m.shape : circle;
    out.push_back(std::move(s));
  }
  return out;
}

Point PixelMap::to_px(Point p) const {
  return {origin_px + (p.x - x0) * scale, extent_px - (p.y - y0) * scale};
}

Point PixelMap::to_data(Point px) const {
  return {x0 + (px.x - origin_px) / scale, y0 + (extent_px - px.y) / scale};
}

std::vector<Point> StimulusData::pixels(std::size_t category) const {
  std::vector<Point> out;
  for (const auto& p : points.at(category)) out.push_back(map.to_px(p));
  return out;
}

std::vector<Point> gen_correlated_points(double r_target, std::size_t count,
                                         std::uint64_t seed, double tolerance) {
  if (!(std::abs(r_target) < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "|r| must be below 1", "r");
  }
  if (count < 3) {
    throw Error(ErrorCode::InvalidArgument, "need at least 3 points", "count");
  }
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < kPointAttempts; ++attempt) {
    auto pts = draw_bivariate(r_target, count, rng);
    if (std::abs(sample_correlation(pts) - r_target) <= tolerance) return pts;
  }
  throw Error(ErrorCode::GenerationFailure,
              "no sample of " + std::to_string(count) + " points within " +
                  fmt(tolerance) + " of r=" + fmt(r_target) + " after " +
                  std::to_string(kPointAttempts) + " draws",
              "r");
}

StimulusData gen_stimulus(const StimulusSpec& spec,
                          std::span<const MarkStyle> styles) {
  return generate(spec, styles, spec.runner_up_gap);
}

StimulusData gen_engagement_check(const StimulusSpec& spec,
                                  std::span<const MarkStyle> styles) {
  if (spec.n != 2 && spec.n != 3) {
    throw Error(ErrorCode::InvalidArgument,
                "engagement checks use 2 or 3 categories", "n");
  }
  return generate(spec, styles, std::max(spec.runner_up_gap, kEngagementGap));
}

std::optional<std::string> verify_stimulus(const StimulusData& s,
                                           double min_gap) {
  const auto& sp = s.spec;
  if (s.points.size() != static_cast<std::size_t>(sp.n)) return "category count";
  std::vector<double> r;
  for (const auto& cat : s.points) {
    if (cat.size() != static_cast<std::size_t>(sp.points_per_category)) {
      return "points per category";
    }
    r.push_back(sample_correlation(cat));
  }
  const double rt = r[s.target_index];
  if (rt < sp.target_r_min - sp.tolerance || rt > sp.target_r_max + sp.tolerance) {
    return "target correlation " + fmt(rt) + " outside range";
  }
  for (int k = 0; k < sp.n; ++k) {
    if (k != s.target_index && r[k] > rt - min_gap + sp.tolerance) {
      return "category " + std::to_string(k) + " too close to the target";
    }
  }
  std::vector<Point> px;
  for (std::size_t k = 0; k < s.points.size(); ++k) {
    for (const auto& p : s.pixels(k)) {
      if (p.x < sp.mark_px / 2 - 1e-9 || p.y < sp.mark_px / 2 - 1e-9 ||
          p.x > sp.plot_px - sp.mark_px / 2 + 1e-9 ||
          p.y > sp.plot_px - sp.mark_px / 2 + 1e-9) {
        return "mark outside the plot";
      }
      px.push_back(p);
    }
  }
  for (std::size_t i = 0; i < px.size(); ++i) {
    for (std::size_t j = i + 1; j < px.size(); ++j) {
      // Rounding through the data mapping can shave a hair off a touching pair.
      if (overlaps(px[i], px[j], sp.mark_px - 1e-6)) return "overlapping marks";
    }
  }
  return std::nullopt;
}

std::string render_svg(const StimulusData& s, const ShapeCatalog& shapes) {
  const auto& sp = s.spec;
  const std::string w = fmt(sp.plot_px);
  const double lo = sp.margin_px;
  const double hi = sp.plot_px - sp.margin_px;
  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + w +
         "\" height=\"" + w + "\" viewBox=\"0 0 " + w + " " + w + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + w + "\" height=\"" + w +
         "\" fill=\"#ffffff\"/>\n";
  out += "<g class=\"axes\" stroke=\"#000000\" stroke-width=\"1\" fill=\"none\">\n";
  out += "<line class=\"axis\" x1=\"" + fmt(lo) + "\" y1=\"" + fmt(hi) + "\" x2=\"" +
         fmt(hi) + "\" y2=\"" + fmt(hi) + "\"/>\n";
  out += "<line class=\"axis\" x1=\"" + fmt(lo) + "\" y1=\"" + fmt(lo) + "\" x2=\"" +
         fmt(lo) + "\" y2=\"" + fmt(hi) + "\"/>\n";
  const double step = (hi - lo) / (sp.ticks_per_axis - 1);
  for (int t = 0; t < sp.ticks_per_axis; ++t) {
    const double x = lo + step * t;
    out += "<line class=\"tick\" x1=\"" + fmt(x) + "\" y1=\"" + fmt(hi) +
           "\" x2=\"" + fmt(x) + "\" y2=\"" + fmt(hi + 5) + "\"/>\n";
  }
  for (int t = 0; t < sp.ticks_per_axis; ++t) {
    const double y = hi - step * t;
    out += "<line class=\"tick\" x1=\"" + fmt(lo - 5) + "\" y1=\"" + fmt(y) +
           "\" x2=\"" + fmt(lo) + "\" y2=\"" + fmt(y) + "\"/>\n";
  }
  out += "</g>\n";
  const double m = sp.mark_px;
  for (std::size_t k = 0; k < s.points.size(); ++k) {
    const MarkStyle& st = s.styles.at(k);
    const ShapeEntry& shape = shapes.at(st.shape);
    std::string paint;
    if (shape.fill_class == FillClass::Filled) {
      paint = "fill=\"" + st.hex + "\" stroke=\"none\"";
    } else {
      // Stroke width is in unit-box coordinates: 0.2 * 6 px = 1.2 px.
      paint = "fill=\"none\" stroke=\"" + st.hex + "\" stroke-width=\"" +
              fmt(1.2 / m) + "\"";
    }
    out += "<g class=\"category\" data-category=\"" + std::to_string(k) + "\" " +
           paint + ">\n";
    for (const auto& p : s.pixels(k)) {
      out += "<path class=\"mark\" transform=\"translate(" + fmt(p.x - m / 2) +
             "," + fmt(p.y - m / 2) + ") scale(" + fmt(m) + ")\" d=\"" +
             shape.path + "\"/>\n";
    }
    out += "</g>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string_view experiment_name(Experiment e) {
  switch (e) {
    case Experiment::E1: return "E1";
    case Experiment::E2: return "E2";
    case Experiment::E3: return "E3";
    case Experiment::E4: return "E4";
  }
  return "E1";
}

Experiment parse_experiment(std::string_view s) {
  const std::string v = lower(s);
  if (v == "e1") return Experiment::E1;
  if (v == "e2") return Experiment::E2;
  if (v == "e3") return Experiment::E3;
  if (v == "e4") return Experiment::E4;
  throw Error(ErrorCode::InvalidArgument,
              "unknown experiment '" + std::string(s) + "'", "experiment");
}

namespace {

std::vector<int> sample_ids(std::mt19937_64& rng, const std::vector<int>& from,
                            int k) {
  std::vector<int> v = from;
  std::shuffle(v.begin(), v.end(), rng);
  v.resize(static_cast<std::size_t>(k));
  return v;
}

std::vector<int> iota_ids(std::size_t n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

// Colour sets whose pairs are spread evenly: each set starts from the least
// used colour and grows by the colour sharing the fewest past pairs with it.
std::vector<std::vector<int>> balanced_sets(std::size_t pool, int n, int count,
                                            std::vector<int>& usage,
                                            std::vector<int>& pairs,
                                            std::mt19937_64& rng) {
  std::vector<std::vector<int>> out;
  for (int k = 0; k < count; ++k) {
    std::vector<double> tie(pool);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& t : tie) t = u(rng);
    std::vector<int> chosen;
    std::vector<bool> in(pool, false);
    while (static_cast<int>(chosen.size()) < n) {
      int best = -1;
      long best_pairs = 0;
      for (std::size_t c = 0; c < pool; ++c) {
        if (in[c]) continue;
        long pc = 0;
        for (int x : chosen) pc += pairs[c * pool + static_cast<std::size_t>(x)];
        const auto key = std::make_tuple(pc, usage[c], tie[c]);
        if (best < 0 ||
            key < std::make_tuple(best_pairs, usage[static_cast<std::size_t>(best)],
                                  tie[static_cast<std::size_t>(best)])) {
          best = static_cast<int>(c);
          best_pairs = pc;
        }
      }
      in[static_cast<std::size_t>(best)] = true;
      chosen.push_back(best);
    }
    for (int a : chosen) {
      ++usage[static_cast<std::size_t>(a)];
      for (int b : chosen) {
        if (a != b) ++pairs[static_cast<std::size_t>(a) * pool + static_cast<std::size_t>(b)];
      }
    }
    std::sort(chosen.begin(), chosen.end());
    out.push_back(std::move(chosen));
  }
  return out;
}

DesignEntry hex_entry(const std::string& hex, std::optional<ShapeId> shape) {
  return {hex, std::nullopt, shape};
}

DesignEntry pool_entry(const ColorPool& pool, ColorId c,
                       std::optional<ShapeId> shape) {
  return {pool.at(c).hex, c, shape};
}

void add_engagement(ExperimentPlan& plan, int groups) {
  for (int g = 0; g < groups; ++g) {
    for (int k = 0; k < 3; ++k) {
      plan.engagement.push_back(
          {g, k == 1 ? 3 : 2, detail::derive_seed(plan.seed, 0xe6a9, g * 3 + k)});
    }
  }
}

void finish(ExperimentPlan& plan, int groups) {
  plan.groups.assign(static_cast<std::size_t>(groups), {});
  for (std::size_t i = 0; i < plan.designs.size(); ++i) {
    Design& d = plan.designs[i];
    d.index = i;
    d.seed = detail::derive_seed(plan.seed, 0xd5, i);
    plan.groups[static_cast<std::size_t>(d.group)].push_back(i);
  }
  add_engagement(plan, groups);
}

void require_sources(const PlanSources& s, bool designer) {
  if (!s.colors || !s.shapes || (designer && !s.designer)) {
    throw Error(ErrorCode::InvalidArgument, "plan sources are incomplete",
                "sources");
  }
}

ExperimentPlan plan_e1(std::uint64_t seed, const PlanSources& src) {
  require_sources(src, true);
  ExperimentPlan plan{Experiment::E1, seed, {}, {}, {}};
  std::mt19937_64 rng(detail::derive_seed(seed, 1));
  const auto all_shapes = iota_ids(src.shapes->size());
  struct Set {
    std::string palette;
    std::vector<std::string> colors;
    std::vector<int> shapes;
    std::vector<int> pairing;
  };
  // sets[n][k]
  std::vector<std::vector<Set>> sets(kMaxCategories + 1);
  for (int n = kMinCategories; n <= kMaxCategories; ++n) {
    for (int k = 0; k < 20; ++k) {
      const NamedPalette& cp = find_palette(*src.designer, kStudyColorPalettes[k / 5]);
      Set s;
      s.palette = cp.name;
      for (int i : sample_ids(rng, iota_ids(cp.colors.size()), n)) {
        s.colors.push_back(cp.colors[static_cast<std::size_t>(i)]);
      }
      s.shapes = sample_ids(rng, all_shapes, n);
      s.pairing = sample_ids(rng, iota_ids(static_cast<std::size_t>(n)), n);
      sets[static_cast<std::size_t>(n)].push_back(std::move(s));
    }
  }
  for (Encoding enc : {Encoding::ColorOnly, Encoding::ShapeOnly, Encoding::Redundant}) {
    for (int n = kMinCategories; n <= kMaxCategories; ++n) {
      for (int k = 0; k < 20; ++k) {
        const Set& s = sets[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
        Design d;
        d.encoding = enc;
        d.n = n;
        d.set_index = k;
        d.group = k % 10;
        if (enc != Encoding::ShapeOnly) d.color_source = s.palette;
        if (enc != Encoding::ColorOnly) d.shape_source = "pool";
        for (int i = 0; i < n; ++i) {
          const std::size_t ui = static_cast<std::size_t>(i);
          if (enc == Encoding::ColorOnly) {
            d.entries.push_back(hex_entry(s.colors[ui], std::nullopt));
          } else if (enc == Encoding::ShapeOnly) {
            d.entries.push_back({std::nullopt, std::nullopt, s.shapes[ui]});
          } else {
            d.entries.push_back(hex_entry(
                s.colors[ui], s.shapes[static_cast<std::size_t>(s.pairing[ui])]));
          }
        }
        plan.designs.push_back(std::move(d));
      }
    }
  }
  finish(plan, 10);
  return plan;
}

ExperimentPlan plan_e2(std::uint64_t seed, const PlanSources& src) {
  require_sources(src, true);
  ExperimentPlan plan{Experiment::E2, seed, {}, {}, {}};
  std::mt19937_64 rng(detail::derive_seed(seed, 2));
  std::vector<int> by_class[3];
  for (const auto& e : src.shapes->entries()) {
    by_class[static_cast<int>(e.fill_class)].push_back(e.id);
  }
  // Palettes 1-3 use a single fill class; 4-6 mix two of each.
  std::vector<std::vector<int>> shape_palettes;
  for (int c = 0; c < 3; ++c) shape_palettes.push_back(sample_ids(rng, by_class[c], 6));
  for (int p = 0; p < 3; ++p) {
    std::vector<int> mix;
    for (int c = 0; c < 3; ++c) {
      for (int id : sample_ids(rng, by_class[c], 2)) mix.push_back(id);
    }
    shape_palettes.push_back(mix);
  }
  for (const auto cname : kStudyColorPalettes) {
    const NamedPalette& cp = find_palette(*src.designer, cname);
    for (std::size_t sp = 0; sp < shape_palettes.size(); ++sp) {
      const auto pairing = sample_ids(rng, iota_ids(6), 6);
      for (int s = 0; s < 10; ++s) {
        Design d;
        d.encoding = Encoding::Redundant;
        d.n = 6;
        d.color_source = cp.name;
        d.shape_source = "shape_palette_" + std::to_string(sp + 1);
        d.set_index = s;
        d.group = s % 5;
        for (std::size_t i = 0; i < 6; ++i) {
          d.entries.push_back(hex_entry(
              cp.colors[i], shape_palettes[sp][static_cast<std::size_t>(pairing[i])]));
        }
        plan.designs.push_back(std::move(d));
      }
    }
  }
  finish(plan, 5);
  return plan;
}

ExperimentPlan plan_e3(std::uint64_t seed, const PlanSources& src) {
  require_sources(src, false);
  ExperimentPlan plan{Experiment::E3, seed, {}, {}, {}};
  std::mt19937_64 rng(detail::derive_seed(seed, 3));
  const std::size_t pool = src.colors->size();
  std::vector<int> usage(pool, 0);
  std::vector<int> pairs(pool * pool, 0);
  for (int n = kMinCategories; n <= kMaxCategories; ++n) {
    const auto sets = balanced_sets(pool, n, 90, usage, pairs, rng);
    for (int k = 0; k < 90; ++k) {
      Design d;
      d.encoding = Encoding::ColorOnly;
      d.n = n;
      d.color_source = "pool";
      d.set_index = k;
      d.group = k % 15;
      for (int c : sets[static_cast<std::size_t>(k)]) {
        d.entries.push_back(pool_entry(*src.colors, c, std::nullopt));
      }
      plan.designs.push_back(std::move(d));
    }
  }
  finish(plan, 15);
  return plan;
}

ExperimentPlan plan_e4(std::uint64_t seed, const PlanSources& src) {
  require_sources(src, false);
  ExperimentPlan plan{Experiment::E4, seed, {}, {}, {}};
  std::mt19937_64 rng(detail::derive_seed(seed, 4));
  // Colour sources: the pool split into lightness tertiles. Shape sources:
  // the three fill classes.
  std::vector<int> by_l = iota_ids(src.colors->size());
  std::stable_sort(by_l.begin(), by_l.end(), [&](int x, int y) {
    return src.colors->at(x).lab.L < src.colors->at(y).lab.L;
  });
  std::vector<std::vector<int>> color_src(3);
  for (std::size_t i = 0; i < by_l.size(); ++i) {
    color_src[i * 3 / by_l.size()].push_back(by_l[i]);
  }
  std::vector<std::vector<int>> shape_src(3);
  for (const auto& e : src.shapes->entries()) {
    shape_src[static_cast<std::size_t>(e.fill_class)].push_back(e.id);
  }
  static constexpr const char* kLight[] = {"pool_dark", "pool_mid", "pool_light"};
  for (int n = kMinCategories; n <= kMaxCategories; ++n) {
    const auto perms = diverse_permutations(static_cast<std::size_t>(n), 13).perms;
    for (int cs = 0; cs < 3; ++cs) {
      for (int ss = 0; ss < 3; ++ss) {
        auto colors = sample_ids(rng, color_src[static_cast<std::size_t>(cs)], n);
        auto shapes = sample_ids(rng, shape_src[static_cast<std::size_t>(ss)], n);
        std::sort(colors.begin(), colors.end());
        std::sort(shapes.begin(), shapes.end());
        for (std::size_t p = 0; p < perms.size(); ++p) {
          Design d;
          d.encoding = Encoding::Redundant;
          d.n = n;
          d.color_source = kLight[cs];
          d.shape_source = std::string(fill_class_name(static_cast<FillClass>(ss)));
          d.set_index = static_cast<int>(p);
          for (int i = 0; i < n; ++i) {
            d.entries.push_back(pool_entry(
                *src.colors, colors[static_cast<std::size_t>(i)],
                shapes[static_cast<std::size_t>(perms[p][static_cast<std::size_t>(i)])]));
          }
          plan.designs.push_back(std::move(d));
        }
      }
    }
  }
  for (std::size_t i = 0; i < plan.designs.size(); ++i) {
    plan.designs[i].group = static_cast<int>(i % 15);
  }
  finish(plan, 15);
  return plan;
}

}  // namespace

ExperimentPlan build_plan(Experiment e, std::uint64_t seed,
                          const PlanSources& sources) {
  switch (e) {
    case Experiment::E1: return plan_e1(seed, sources);
    case Experiment::E2: return plan_e2(seed, sources);
    case Experiment::E3: return plan_e3(seed, sources);
    case Experiment::E4: return plan_e4(seed, sources);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown experiment", "experiment");
}

std::vector<MarkStyle> design_styles(const Design& d,
                                     const ShapeCatalog& shapes) {
  const ShapeId circle = shapes.find("circle").value_or(0);
  std::vector<MarkStyle> out;
  for (const auto& e : d.entries) {
    out.push_back({e.hex.value_or(std::string(kShapeOnlyHex)),
                   e.shape.value_or(circle)});
  }
  return out;
}

std::string format_plan(const ExperimentPlan& plan) {
  std::string out = "# catpaw-plan 1\n";
  out += "kind\tindex\tgroup\texperiment\tencoding\tn\tcolor_source\tshape_source\tset\tseed\tentries\n";
  const std::string exp(experiment_name(plan.experiment));
  for (const auto& d : plan.designs) {
    std::string entries;
    for (const auto& e : d.entries) {
      if (!entries.empty()) entries += ",";
      std::string part;
      if (e.color) part = "c" + std::to_string(*e.color);
      else if (e.hex) part = *e.hex;
      if (e.shape) part += (part.empty() ? "s" : "/s") + std::to_string(*e.shape);
      entries += part;
    }
    out += "design\t" + std::to_string(d.index) + "\t" + std::to_string(d.group) +
           "\t" + exp + "\t" + std::string(encoding_name(d.encoding)) + "\t" +
           std::to_string(d.n) + "\t" + (d.color_source.empty() ? "-" : d.color_source) +
           "\t" + (d.shape_source.empty() ? "-" : d.shape_source) + "\t" +
           std::to_string(d.set_index) + "\t" + std::to_string(d.seed) + "\t" +
           entries + "\n";
  }
  for (std::size_t i = 0; i < plan.engagement.size(); ++i) {
    const auto& c = plan.engagement[i];
    out += "engagement\t" + std::to_string(i) + "\t" + std::to_string(c.group) +
           "\t" + exp + "\t-\t" + std::to_string(c.n) + "\t-\t-\t-\t" +
           std::to_string(c.seed) + "\t-\n";
  }
  return out;
}

}  // namespace catpaw
