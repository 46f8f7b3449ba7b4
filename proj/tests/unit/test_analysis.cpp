#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "catpaw/analysis.hpp"
#include "catpaw/error.hpp"
#include "doctest.h"
#include "../support/fixtures.hpp"
#include "../support/rankfx.hpp"
#include "../support/planted.hpp"

using namespace catpaw;
using testref::partition;
using testref::planted;

namespace {

using Vec = std::vector<double>;

struct OracleTree {
  std::vector<double> heights;
  std::vector<int> labels_at_k;
};

// Ward from first principles: merge the pair whose union raises the
// within-cluster sum of squares least; height = sqrt(2 * increase).
OracleTree ward_oracle(const std::vector<Vec>& items, int k) {
  std::vector<std::vector<int>> clusters;
  for (std::size_t i = 0; i < items.size(); ++i) clusters.push_back({int(i)});
  auto sse = [&](const std::vector<int>& c) {
    Vec m(items[0].size(), 0.0);
    for (int i : c)
      for (std::size_t d = 0; d < m.size(); ++d) m[d] += items[i][d] / c.size();
    double s = 0;
    for (int i : c)
      for (std::size_t d = 0; d < m.size(); ++d) s += std::pow(items[i][d] - m[d], 2);
    return s;
  };
  OracleTree t;
  auto label = [&] {
    std::vector<int> lab(items.size());
    std::vector<std::vector<int>> sorted = clusters;
    for (auto& c : sorted) std::sort(c.begin(), c.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t c = 0; c < sorted.size(); ++c)
      for (int i : sorted[c]) lab[i] = int(c);
    return lab;
  };
  if (int(clusters.size()) == k) t.labels_at_k = label();
  while (clusters.size() > 1) {
    double best = 1e300;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < clusters.size(); ++i)
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        auto u = clusters[i];
        u.insert(u.end(), clusters[j].begin(), clusters[j].end());
        const double inc = sse(u) - sse(clusters[i]) - sse(clusters[j]);
        if (inc < best) {
          best = inc;
          bi = i;
          bj = j;
        }
      }
    t.heights.push_back(std::sqrt(2 * std::max(0.0, best)));
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    clusters.erase(clusters.begin() + bj);
    if (int(clusters.size()) == k) t.labels_at_k = label();
  }
  return t;
}

}  // namespace

TEST_CASE("ward: singletons, separated groups and bad k") {
  const std::vector<Vec> pts{{0.0}, {0.1}, {5.0}, {5.2}, {0.05}};
  const auto singles = ward_cluster(pts, 5);
  CHECK(singles.labels == std::vector<int>{0, 1, 2, 3, 4});
  const auto two = ward_cluster(pts, 2);
  CHECK(two.labels == std::vector<int>{0, 0, 1, 1, 0});
  CHECK(two.heights.size() == 4);
  CHECK_THROWS_AS(ward_cluster(pts, 6), Error);
  CHECK_THROWS_AS(ward_cluster(pts, 0), Error);
  CHECK_THROWS_AS(ward_cluster({{0.0, 1.0}, {1.0}}, 1), Error);
}

TEST_CASE("ward matches a sum-of-squares oracle") {
  testgen::Gen g(15);
  for (int run = 0; run < 40; ++run) {
    const int n = g.integer(2, 14);
    const int dims = g.integer(1, 4);
    std::vector<Vec> items(n, Vec(dims));
    for (auto& v : items)
      for (auto& x : v) x = g.uniform(0, 1);
    const int k = g.integer(1, n);
    const auto got = ward_cluster(items, k);
    const auto want = ward_oracle(items, k);
    REQUIRE(got.heights.size() == want.heights.size());
    for (std::size_t i = 0; i < got.heights.size(); ++i)
      REQUIRE(got.heights[i] == doctest::Approx(want.heights[i]).epsilon(1e-9));
    REQUIRE(partition(got.labels) == partition(want.labels_at_k));
    REQUIRE(std::is_sorted(got.heights.begin(), got.heights.end()));
    for (int l : got.labels) REQUIRE((l >= 0 && l < k));
  }
}

TEST_CASE("ward is invariant to input order") {
  testgen::Gen g(16);
  for (int run = 0; run < 30; ++run) {
    const int n = g.integer(3, 20);
    std::vector<Vec> items(n, Vec(3));
    for (auto& v : items)
      for (auto& x : v) x = g.uniform(0, 1);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), g.engine());
    std::vector<Vec> shuffled;
    for (int i : order) shuffled.push_back(items[i]);
    const int k = g.integer(1, n);
    const auto a = ward_cluster(items, k);
    const auto b = ward_cluster(shuffled, k);
    std::vector<int> back(n);
    for (int i = 0; i < n; ++i) back[order[i]] = b.labels[i];
    REQUIRE(partition(a.labels) == partition(back));
  }
}

TEST_CASE("ward recovers a planted four-group structure") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    testgen::Gen g(seed);
    std::vector<int> truth;
    const auto items = planted(g, 4, 6, 9, 0.15, 0.01, truth);
    REQUIRE(partition(ward_cluster(items, 4).labels) == partition(truth));
  }
}

TEST_CASE("pearson") {
  const Vec x{1, 2, 3, 4, 5};
  CHECK(pearson(x, x) == doctest::Approx(1.0));
  const Vec neg{-1, -2, -3, -4, -5};
  CHECK(pearson(x, neg) == doctest::Approx(-1.0));
  // sxy = 6, sxx = 10, syy = 6  ->  6 / sqrt(60)
  const Vec y{2, 4, 5, 4, 5};
  CHECK(pearson(x, y) == doctest::Approx(6.0 / std::sqrt(60.0)).epsilon(1e-12));
  const Vec flat{3, 3, 3, 3, 3};
  try {
    pearson(x, flat);
    FAIL("expected undefined correlation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UndefinedCorrelation);
  }
  CHECK_THROWS_AS(pearson(Vec{1}, Vec{1}), Error);
  CHECK_THROWS_AS(pearson(x, Vec{1, 2}), Error);

  testgen::Gen g(4);
  for (int run = 0; run < 200; ++run) {
    Vec a(10), b(10);
    for (auto& v : a) v = g.normal(0, 1);
    for (auto& v : b) v = g.normal(0, 1);
    const double s = g.uniform(-3, 3);
    if (std::abs(s) < 1e-3) continue;
    const double off = g.uniform(-5, 5);
    Vec t = a;
    for (auto& v : t) v = s * v + off;
    REQUIRE(pearson(t, b) == doctest::Approx((s > 0 ? 1 : -1) * pearson(a, b)).epsilon(1e-9));
  }
}

TEST_CASE("bootstrap interval") {
  const Vec same(12, 0.7);
  const auto c = bootstrap_mean_ci(same, 1);
  CHECK(c.lo == doctest::Approx(0.7));
  CHECK(c.hi == doctest::Approx(0.7));
  testgen::Gen g(9);
  Vec v(40);
  for (auto& x : v) x = g.normal(0.6, 0.1);
  const auto a = bootstrap_mean_ci(v, 3);
  const auto b = bootstrap_mean_ci(v, 3);
  CHECK(a.lo == b.lo);
  CHECK(a.hi == b.hi);
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  CHECK(a.lo < m);
  CHECK(a.hi > m);
  // Roughly mean +- 1.96 standard errors.
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  const double se = std::sqrt(ss / v.size() / v.size());
  CHECK(a.hi - a.lo == doctest::Approx(2 * 1.96 * se).epsilon(0.25));
  CHECK_THROWS_AS(bootstrap_mean_ci(Vec{}, 1), Error);
}

TEST_CASE("rank validation with an exact oracle") {
  testgen::Gen g(5);
  auto f = rankfx::colour_sets(g, {3, 5}, 60);
  // Linearly spaced scores within each count, so the per-rank means are
  // linear in rank whichever palettes each repeat samples.
  std::map<int, int> seen;
  for (const auto& p : f.palettes) {
    const int i = seen[int(p.n())]++;
    f.score[canonical_key(p)] = 0.95 - 0.01 * i;
  }
  RankValidationOptions opt;
  opt.samples_per_n = 60;
  const auto trials = rankfx::trials_with_accuracy(
      f.palettes, [&](const Palette& p) { return f.score.at(canonical_key(p)); }, 100);
  const auto rep = rank_validation(rankfx::table_scorer(f), trials, opt);
  CHECK(rep.rows.size() == 60);
  CHECK(std::abs(rep.correlation) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.category_counts == std::vector<int>{3, 5});
  for (const auto& r : rep.rows) CHECK(r.samples == 6);
}

TEST_CASE("rank validation means are non-increasing when accuracy falls with rank") {
  testgen::Gen g(6);
  for (int run = 0; run < 10; ++run) {
    auto f = rankfx::colour_sets(g, {2, 4, 7}, 40);
    for (auto& [k, v] : f.score) v = g.uniform(0.3, 0.95);
    // Accuracy is a strictly increasing function of score, hence strictly
    // decreasing in rank.
    const auto trials = rankfx::trials_with_accuracy(
        f.palettes, [&](const Palette& p) { return f.score.at(canonical_key(p)); }, 1000);
    RankValidationOptions opt;
    opt.samples_per_n = 25;
    opt.seed = run;
    const auto rep = rank_validation(rankfx::table_scorer(f), trials, opt);
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
      REQUIRE(rep.rows[i].mean_accuracy <= rep.rows[i - 1].mean_accuracy + 1e-12);
    REQUIRE(rep.correlation < -0.8);
  }
}

TEST_CASE("rank validation coverage errors") {
  testgen::Gen g(7);
  auto f = rankfx::colour_sets(g, {4}, 30);
  const auto trials = rankfx::trials_with_accuracy(
      f.palettes, [](const Palette&) { return 0.5; }, 5);
  RankValidationOptions opt;
  opt.samples_per_n = 50;
  try {
    rank_validation(rankfx::table_scorer(f), trials, opt);
    FAIL("expected coverage error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Coverage);
    CHECK(e.field() == "n=4");
  }
  opt.samples_per_n = 10;
  opt.palettes = f.palettes;
  Palette extra{Encoding::ColorOnly, {{0, std::nullopt}, {1, std::nullopt}, {2, std::nullopt}, {3, std::nullopt}}};
  f.score[canonical_key(extra)] = 0.5;
  opt.palettes.push_back(extra);
  const bool tested = std::any_of(f.palettes.begin(), f.palettes.end(), [&](const Palette& p) {
    return canonical_key(p) == canonical_key(extra);
  });
  if (!tested) {
    try {
      rank_validation(rankfx::table_scorer(f), trials, opt);
      FAIL("expected coverage error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Coverage);
      CHECK(std::string(e.what()).find(canonical_key(extra)) != std::string::npos);
    }
  }
  CHECK_THROWS_AS(rank_validation(rankfx::table_scorer(f), {}, RankValidationOptions{}), Error);
}

TEST_CASE("baseline report") {
  testgen::Gen g(8);
  auto f = rankfx::colour_sets(g, {5}, 90);
  std::vector<PaletteGroup> groups{{"generated", {}}, {"designer", {}}, {"user", {}}};
  const double offsets[] = {0.775, 0.684, 0.662};
  for (std::size_t i = 0; i < f.palettes.size(); ++i) {
    const std::size_t grp = i % 3;
    f.score[canonical_key(f.palettes[i])] = offsets[grp] + g.uniform(-0.004, 0.004);
    groups[grp].palettes.push_back(f.palettes[i]);
  }
  const auto rows = baseline_report(groups, rankfx::table_scorer(f));
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(rows[i].name == groups[i].name);
    CHECK(rows[i].count == 30);
    CHECK(std::abs(rows[i].mean - offsets[i]) <= 0.01);
    CHECK(rows[i].ci.lo <= rows[i].mean);
    CHECK(rows[i].ci.hi >= rows[i].mean);
  }
  CHECK(rows[0].mean > rows[1].mean);
  CHECK(rows[1].mean > rows[2].mean);
  CHECK(format_baseline_report(rows) == format_baseline_report(baseline_report(groups, rankfx::table_scorer(f))));

  const std::vector<PaletteGroup> same{{"same", {f.palettes[0], f.palettes[0], f.palettes[0]}}};
  const auto s = baseline_report(same, rankfx::table_scorer(f));
  CHECK(s[0].ci.hi - s[0].ci.lo == 0.0);

  const auto pools = testfx::small_pools(6, 6);
  const EvidenceSet empty = empty_evidence(6, 6);
  const Model model{&pools.colors, &pools.shapes, &empty, {}};
  const std::vector<PaletteGroup> bad{
      {"x", {Palette{Encoding::ColorOnly, {{0, std::nullopt}, {1, std::nullopt}}}}}};
  try {
    baseline_report(bad, model_scorer(model));
    FAIL("expected missing evidence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingEvidence);
  }
}

TEST_CASE("trial palettes read the encoding off the markers") {
  TrialRecord t;
  t.category_count = 2;
  t.categories = {{3, 1}, {0, 2}};
  const auto p = trial_palette(t);
  CHECK(p.encoding == Encoding::Redundant);
  CHECK(canonical_key(p) == "redundant:c0/s2,c3/s1");
  t.categories = {{std::nullopt, 5}, {std::nullopt, 2}};
  CHECK(trial_palette(t).encoding == Encoding::ShapeOnly);
}

TEST_CASE("report text and plot") {
  RankValidationReport r;
  r.samples_per_n = 2;
  r.repeats = 1;
  r.category_counts = {3};
  r.rows = {{1, 0.9, {0.85, 0.95}, 1}, {2, 0.8, {0.75, 0.85}, 1}};
  r.correlation = -1.0;
  const auto text = format_rank_report(r);
  CHECK(text.find("correlation=-1.000000") != std::string::npos);
  CHECK(text.find("1\t0.900000\t0.850000\t0.950000\t1") != std::string::npos);
  const auto svg = render_rank_plot(r);
  CHECK(svg.find("class=\"ci\"") != std::string::npos);
  CHECK(svg.find("class=\"mean\"") != std::string::npos);
}
