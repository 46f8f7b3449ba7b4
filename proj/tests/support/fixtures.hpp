#pragma once

// Pools and evidence fixtures plus an independent palette scorer.

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <vector>

#include "catpaw/catalog.hpp"
#include "catpaw/evidence.hpp"
#include "catpaw/optimizer.hpp"
#include "gen.hpp"
#include "paths.hpp"

namespace testfx {

inline const catpaw::Pools& bundled() {
  static const catpaw::Pools pools = catpaw::load_default_pools(
      {testpaths::data_dir() / "colors.tsv", testpaths::data_dir() / "shapes.tsv"},
      catpaw::JndParams{});
  return pools;
}

// First `nc` colours and `ns` shapes of the bundled pools, ids kept dense.
inline catpaw::Pools small_pools(std::size_t nc, std::size_t ns) {
  std::vector<catpaw::ColorEntry> c(bundled().colors.entries().begin(),
                                    bundled().colors.entries().begin() + nc);
  std::vector<catpaw::ShapeEntry> s(bundled().shapes.entries().begin(),
                                    bundled().shapes.entries().begin() + ns);
  return {catpaw::ColorPool(std::move(c)), catpaw::ShapeCatalog(std::move(s))};
}

// Random counts in every cell and bin. With `sparse` some cells get fewer
// than five trials, so lookups exercise the fallback and missing paths.
inline catpaw::EvidenceSet random_evidence(testgen::Gen& g, std::size_t nc,
                                           std::size_t ns, bool sparse) {
  using namespace catpaw;
  EvidenceSet ev = empty_evidence(nc, ns);
  auto draw = [&](std::uint32_t& correct, std::uint32_t& trials) {
    trials = sparse && g.coin(0.15) ? static_cast<std::uint32_t>(g.integer(0, 4))
                                    : static_cast<std::uint32_t>(g.integer(5, 60));
    correct = trials ? static_cast<std::uint32_t>(
                           g.integer(0, static_cast<int>(trials)))
                     : 0;
  };
  for (int a = 0; a < 3; ++a) {
    const std::size_t n = a == 0 ? nc : a == 1 ? ns : nc * ns;
    for (int b = 0; b < 4; ++b) {
      auto& m = ev.pairs[a][b];
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
          std::uint32_t c = 0, t = 0;
          draw(c, t);
          if (t) m.set_counts(i, j, c, t);
        }
    }
  }
  for (int b = 0; b < 4; ++b) {
    auto& t = ev.markers[b];
    for (std::size_t k = 0; k < nc * ns; ++k) draw(t.correct[k], t.trials[k]);
  }
  return ev;
}

inline int bin_index(std::size_t n) { return n <= 4 ? 0 : n <= 7 ? 1 : 2; }

// Bin cell when it has min_obs trials, else the pooled cell, else nothing.
inline std::optional<double> lookup(const catpaw::EvidenceSet& ev, int axis,
                                    std::size_t n, std::size_t i, std::size_t j,
                                    std::size_t min_obs) {
  for (int b : {bin_index(n), 3}) {
    const auto& m = ev.pairs[axis][b];
    if (m.trials(i, j) >= min_obs && m.trials(i, j) > 0) {
      return double(m.correct(i, j)) / m.trials(i, j);
    }
  }
  return std::nullopt;
}

inline std::optional<double> lookup_marker(const catpaw::EvidenceSet& ev,
                                           std::size_t n, std::size_t k,
                                           std::size_t min_obs) {
  for (int b : {bin_index(n), 3}) {
    const auto& t = ev.markers[b];
    if (t.trials[k] >= min_obs && t.trials[k] > 0) {
      return double(t.correct[k]) / t.trials[k];
    }
  }
  return std::nullopt;
}

inline std::optional<double> oracle_pair_mean(const catpaw::EvidenceSet& ev, int axis,
                                              const std::vector<std::size_t>& ids,
                                              std::size_t min_obs) {
  const std::size_t n = ids.size();
  double sum = 0;
  int cnt = 0;
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) {
      if (x == y) continue;
      const auto v = lookup(ev, axis, n, std::min(ids[x], ids[y]),
                            std::max(ids[x], ids[y]), min_obs);
      if (!v) return std::nullopt;
      sum += *v;
      ++cnt;
    }
  return sum / cnt;
}

struct OracleScore {
  double score;
  double mp, mi, cp, sp, lv, tm;
};

// Straight transcription of the weighted component definitions.
inline std::optional<OracleScore> oracle_redundant(
    const std::vector<catpaw::Marker>& a, const catpaw::Pools& pools,
    const catpaw::EvidenceSet& ev, const catpaw::OptimizerConfig& cfg) {
  const std::size_t n = a.size();
  const std::size_t ns = pools.shapes.size();
  std::vector<std::size_t> cs, ss, ms;
  for (const auto& m : a) {
    cs.push_back(*m.color);
    ss.push_back(*m.shape);
    ms.push_back(std::size_t(*m.color) * ns + *m.shape);
  }
  OracleScore o{};
  const auto mp = oracle_pair_mean(ev, 2, ms, cfg.min_obs);
  const auto cp = oracle_pair_mean(ev, 0, cs, cfg.min_obs);
  const auto sp = oracle_pair_mean(ev, 1, ss, cfg.min_obs);
  if (!mp || !cp || !sp) return std::nullopt;
  double mi = 0;
  for (std::size_t k : ms) {
    const auto v = lookup_marker(ev, n, k, cfg.min_obs);
    if (!v) return std::nullopt;
    mi += *v / n;
  }
  double lmin = 1e9, lmax = -1e9;
  for (const auto& e : pools.colors.entries()) {
    lmin = std::min(lmin, e.lab.L);
    lmax = std::max(lmax, e.lab.L);
  }
  double s1 = 0, s2 = 0;
  for (std::size_t c : cs) {
    const double L = pools.colors.at(int(c)).lab.L;
    s1 += L;
    s2 += L * L;
  }
  const double var = s2 / n - (s1 / n) * (s1 / n);
  const double half = (lmax - lmin) / 2;
  o.lv = std::min(1.0, var / (half * half));
  std::set<int> classes;
  for (std::size_t s : ss) classes.insert(int(pools.shapes.at(int(s)).fill_class));
  o.tm = classes.size() / 3.0;
  o.mp = *mp;
  o.mi = mi;
  o.cp = *cp;
  o.sp = *sp;
  const auto& w = cfg.weights;
  o.score = w.marker_pair_mean * o.mp + w.marker_individual_mean * o.mi +
            w.color_pair_mean * o.cp + w.shape_pair_mean * o.sp +
            w.lightness_variance * o.lv + w.shape_type_mix * o.tm;
  return o;
}

inline std::optional<double> oracle_score(const catpaw::Palette& p,
                                          const catpaw::Pools& pools,
                                          const catpaw::EvidenceSet& ev,
                                          const catpaw::OptimizerConfig& cfg) {
  if (p.encoding == catpaw::Encoding::Redundant) {
    const auto o = oracle_redundant(p.entries, pools, ev, cfg);
    return o ? std::optional<double>(o->score) : std::nullopt;
  }
  const bool color = p.encoding == catpaw::Encoding::ColorOnly;
  std::vector<std::size_t> ids;
  for (const auto& m : p.entries) ids.push_back(color ? *m.color : *m.shape);
  return oracle_pair_mean(ev, color ? 0 : 1, ids, cfg.min_obs);
}

}  // namespace testfx
