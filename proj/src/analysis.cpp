#include "catpaw/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "catpaw/error.hpp"
#include "seeds.hpp"

namespace catpaw {

namespace {

std::string fmt(double v, int digits = 6) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double quantile(std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

ClusterResult ward_cluster(const std::vector<std::vector<double>>& items,
                           int k) {
  const std::size_t n = items.size();
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw Error(ErrorCode::InvalidArgument,
                "k=" + std::to_string(k) + " needs between 1 and " +
                    std::to_string(n) + " clusters",
                "k");
  }
  for (const auto& v : items) {
    if (v.size() != items[0].size()) {
      throw Error(ErrorCode::InvalidArgument,
                  "all item vectors must have the same length", "items");
    }
  }
  // Active clusters hold their member list and scipy-style id.
  std::vector<std::vector<int>> members(n);
  std::vector<int> ids(n);
  std::vector<bool> alive(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    members[i] = {static_cast<int>(i)};
    ids[i] = static_cast<int>(i);
  }
  std::vector<double> d(n * n, 0.0);  // Ward distances between slots
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < items[i].size(); ++c) {
        const double t = items[i][c] - items[j][c];
        s += t * t;
      }
      d[i * n + j] = d[j * n + i] = std::sqrt(s);
    }
  }
  ClusterResult out;
  out.k = k;
  std::vector<int> labels_at_k;
  auto snapshot = [&] {
    std::vector<int> lab(n, -1);
    int next = 0;
    std::map<std::size_t, int> slot_label;
    for (std::size_t item = 0; item < n; ++item) {
      for (std::size_t s = 0; s < n; ++s) {
        if (!alive[s]) continue;
        if (std::find(members[s].begin(), members[s].end(), static_cast<int>(item)) !=
            members[s].end()) {
          auto it = slot_label.find(s);
          if (it == slot_label.end()) it = slot_label.emplace(s, next++).first;
          lab[item] = it->second;
        }
      }
    }
    return lab;
  };
  if (static_cast<std::size_t>(k) == n) labels_at_k = snapshot();
  int next_id = static_cast<int>(n);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t bi = 0, bj = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!alive[j]) continue;
        if (d[i * n + j] < best) {
          best = d[i * n + j];
          bi = i;
          bj = j;
        }
      }
    }
    const double ni = static_cast<double>(members[bi].size());
    const double nj = static_cast<double>(members[bj].size());
    for (std::size_t s = 0; s < n; ++s) {
      if (!alive[s] || s == bi || s == bj) continue;
      const double ns = static_cast<double>(members[s].size());
      const double dis = d[bi * n + s], djs = d[bj * n + s];
      const double v = ((ni + ns) * dis * dis + (nj + ns) * djs * djs - ns * best * best) /
                       (ni + nj + ns);
      d[bi * n + s] = d[s * n + bi] = std::sqrt(std::max(0.0, v));
    }
    out.merges.emplace_back(std::min(ids[bi], ids[bj]), std::max(ids[bi], ids[bj]));
    out.heights.push_back(best);
    members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
    alive[bj] = false;
    ids[bi] = next_id++;
    if (n - step - 1 == static_cast<std::size_t>(k)) labels_at_k = snapshot();
  }
  out.labels = std::move(labels_at_k);
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::InvalidArgument,
                "pearson needs two equal-length lists of at least 2 values",
                "x");
  }
  const double mx = mean_of(x), my = mean_of(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    throw Error(ErrorCode::UndefinedCorrelation,
                "correlation is undefined when a variable is constant",
                sxx <= 0.0 ? "x" : "y");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Interval bootstrap_mean_ci(std::span<const double> values, std::uint64_t seed,
                           int resamples, double level) {
  if (values.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no values to resample", "values");
  }
  if (resamples < 1 || !(level > 0.0 && level < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "bad bootstrap settings",
                "resamples");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(resamples));
  for (int r = 0; r < resamples; ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += values[pick(rng)];
    means.push_back(s / static_cast<double>(values.size()));
  }
  std::sort(means.begin(), means.end());
  const double a = (1.0 - level) / 2.0;
  return {quantile(means, a), quantile(means, 1.0 - a)};
}

PaletteScorer model_scorer(const Model& model) {
  return [&model](const Palette& p) { return score_palette(p, model).score; };
}

Palette trial_palette(const TrialRecord& t) {
  Palette p;
  const bool c = t.categories.front().color.has_value();
  const bool s = t.categories.front().shape.has_value();
  p.encoding = c && s ? Encoding::Redundant
               : c    ? Encoding::ColorOnly
                      : Encoding::ShapeOnly;
  p.entries = t.categories;
  std::sort(p.entries.begin(), p.entries.end());
  return p;
}

RankValidationReport rank_validation(const PaletteScorer& scorer,
                                     std::span<const TrialRecord> trials,
                                     const RankValidationOptions& opt) {
  if (opt.samples_per_n < 2 || opt.repeats < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "need at least 2 samples per count and 1 repeat",
                "samples_per_n");
  }
  struct Tally {
    std::size_t correct = 0;
    std::size_t total = 0;
  };
  std::map<std::string, Tally> tally;
  std::map<int, std::map<std::string, Palette>> tested;  // n -> key -> palette
  for (const auto& t : trials) {
    const Palette p = trial_palette(t);
    const std::string key = canonical_key(p);
    auto& e = tally[key];
    ++e.total;
    if (t.correct) ++e.correct;
    tested[static_cast<int>(p.n())].emplace(key, p);
  }

  std::map<int, std::vector<Palette>> candidates;
  if (!opt.palettes.empty()) {
    std::vector<std::string> missing;
    for (const auto& p : opt.palettes) {
      const std::string key = canonical_key(p);
      if (!tally.count(key)) missing.push_back(key);
      candidates[static_cast<int>(p.n())].push_back(p);
    }
    if (!missing.empty()) {
      std::string msg = std::to_string(missing.size()) + " palette(s) have no trials:";
      for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += " " + missing[i];
      throw Error(ErrorCode::Coverage, msg, "palettes");
    }
  } else {
    for (const auto& [n, byKey] : tested) {
      for (const auto& [key, p] : byKey) candidates[n].push_back(p);
    }
  }

  std::vector<int> counts = opt.category_counts;
  if (counts.empty()) {
    for (const auto& [n, v] : candidates) counts.push_back(n);
  }
  if (counts.empty()) {
    throw Error(ErrorCode::Coverage, "the trials contain no palettes", "trials");
  }
  for (int n : counts) {
    const std::size_t have = candidates.count(n) ? candidates[n].size() : 0;
    if (have < opt.samples_per_n) {
      throw Error(ErrorCode::Coverage,
                  "category count " + std::to_string(n) + " has " +
                      std::to_string(have) + " tested palettes, need " +
                      std::to_string(opt.samples_per_n),
                  "n=" + std::to_string(n));
    }
  }

  std::vector<std::vector<double>> per_rank(opt.samples_per_n);
  for (int rep = 0; rep < opt.repeats; ++rep) {
    for (int n : counts) {
      std::mt19937_64 rng(detail::derive_seed(opt.seed, static_cast<std::uint64_t>(rep),
                                              static_cast<std::uint64_t>(n)));
      std::vector<Palette> pool = candidates[n];
      std::shuffle(pool.begin(), pool.end(), rng);
      pool.resize(opt.samples_per_n);
      struct Scored {
        double score;
        std::string key;
      };
      std::vector<Scored> ranked;
      for (const auto& p : pool) ranked.push_back({scorer(p), canonical_key(p)});
      std::sort(ranked.begin(), ranked.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.key < b.key;
      });
      for (std::size_t r = 0; r < ranked.size(); ++r) {
        const Tally& t = tally.at(ranked[r].key);
        per_rank[r].push_back(static_cast<double>(t.correct) /
                              static_cast<double>(t.total));
      }
    }
  }

  RankValidationReport rep;
  rep.samples_per_n = opt.samples_per_n;
  rep.repeats = opt.repeats;
  rep.category_counts = counts;
  std::vector<double> xs, ys;
  for (std::size_t r = 0; r < per_rank.size(); ++r) {
    RankRow row;
    row.rank = static_cast<int>(r) + 1;
    row.samples = per_rank[r].size();
    row.mean_accuracy = mean_of(per_rank[r]);
    row.ci = bootstrap_mean_ci(per_rank[r], detail::derive_seed(opt.seed, 0xc1, r),
                               opt.resamples);
    rep.rows.push_back(row);
    xs.push_back(row.rank);
    ys.push_back(row.mean_accuracy);
  }
  rep.correlation = pearson(xs, ys);
  return rep;
}

std::vector<BaselineRow> baseline_report(std::span<const PaletteGroup> groups,
                                         const PaletteScorer& scorer,
                                         std::uint64_t seed) {
  std::vector<BaselineRow> out;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& group = groups[g];
    if (group.palettes.empty()) {
      throw Error(ErrorCode::InvalidArgument,
                  "group '" + group.name + "' has no palettes", "groups");
    }
    std::vector<double> scores;
    for (const auto& p : group.palettes) scores.push_back(scorer(p));
    BaselineRow row;
    row.name = group.name;
    row.count = scores.size();
    row.mean = mean_of(scores);
    row.ci = bootstrap_mean_ci(scores, detail::derive_seed(seed, g));
    out.push_back(std::move(row));
  }
  return out;
}

std::string format_rank_report(const RankValidationReport& r) {
  std::string out = "# catpaw-rank-validation 1\n";
  out += "# samples_per_n=" + std::to_string(r.samples_per_n) +
         " repeats=" + std::to_string(r.repeats) + " counts=";
  for (std::size_t i = 0; i < r.category_counts.size(); ++i) {
    out += (i ? "," : "") + std::to_string(r.category_counts[i]);
  }
  out += "\n# correlation=" + fmt(r.correlation) + "\n";
  out += "rank\tmean_accuracy\tci_lo\tci_hi\tsamples\n";
  for (const auto& row : r.rows) {
    out += std::to_string(row.rank) + "\t" + fmt(row.mean_accuracy) + "\t" +
           fmt(row.ci.lo) + "\t" + fmt(row.ci.hi) + "\t" +
           std::to_string(row.samples) + "\n";
  }
  return out;
}

std::string format_baseline_report(std::span<const BaselineRow> rows) {
  std::string out = "# catpaw-baseline 1\ngroup\tpalettes\tmean\tci_lo\tci_hi\n";
  for (const auto& r : rows) {
    out += r.name + "\t" + std::to_string(r.count) + "\t" + fmt(r.mean) + "\t" +
           fmt(r.ci.lo) + "\t" + fmt(r.ci.hi) + "\n";
  }
  return out;
}

std::string render_rank_plot(const RankValidationReport& r) {
  const double w = 480, h = 320, m = 40;
  double lo = 1.0, hi = 0.0;
  for (const auto& row : r.rows) {
    lo = std::min(lo, row.ci.lo);
    hi = std::max(hi, row.ci.hi);
  }
  if (hi <= lo) {
    lo -= 0.05;
    hi += 0.05;
  }
  const double nr = static_cast<double>(std::max<std::size_t>(r.rows.size(), 2) - 1);
  auto X = [&](double rank) { return m + (rank - 1.0) / nr * (w - 2 * m); };
  auto Y = [&](double v) { return h - m - (v - lo) / (hi - lo) * (h - 2 * m); };
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
                    fmt(w, 0) + "\" height=\"" + fmt(h, 0) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  out += "<g stroke=\"#000000\" fill=\"none\"><line x1=\"" + fmt(m, 2) + "\" y1=\"" +
         fmt(h - m, 2) + "\" x2=\"" + fmt(w - m, 2) + "\" y2=\"" + fmt(h - m, 2) +
         "\"/><line x1=\"" + fmt(m, 2) + "\" y1=\"" + fmt(m, 2) + "\" x2=\"" + fmt(m, 2) +
         "\" y2=\"" + fmt(h - m, 2) + "\"/></g>\n";
  std::string band, line;
  for (const auto& row : r.rows) band += fmt(X(row.rank), 2) + "," + fmt(Y(row.ci.hi), 2) + " ";
  for (auto it = r.rows.rbegin(); it != r.rows.rend(); ++it) {
    band += fmt(X(it->rank), 2) + "," + fmt(Y(it->ci.lo), 2) + " ";
  }
  for (const auto& row : r.rows) {
    line += fmt(X(row.rank), 2) + "," + fmt(Y(row.mean_accuracy), 2) + " ";
  }
  out += "<polygon class=\"ci\" fill=\"#9ecae1\" fill-opacity=\"0.5\" points=\"" + band + "\"/>\n";
  out += "<polyline class=\"mean\" fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\" points=\"" +
         line + "\"/>\n";
  out += "<text x=\"" + fmt(w / 2, 0) + "\" y=\"" + fmt(h - 8, 0) +
         "\" font-size=\"12\" text-anchor=\"middle\">predicted rank</text>\n";
  out += "</svg>\n";
  return out;
}

}  // namespace catpaw
