#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "catpaw/catalog.hpp"
#include "catpaw/error.hpp"
#include "doctest.h"
#include "../support/gen.hpp"
#include "../support/jnd_oracle.hpp"
#include "../support/paths.hpp"

using namespace catpaw;
using testref::oracle_jnd;

namespace {

bool lab_less(const LabColor& x, const LabColor& y) {
  return std::tie(x.L, x.a, x.b) < std::tie(y.L, y.a, y.b);
}

double inertia(std::span<const LabColor> xs, std::span<const LabColor> cs) {
  double total = 0.0;
  for (const auto& x : xs) {
    double best = 1e300;
    for (const auto& c : cs) {
      best = std::min(best, (x.L - c.L) * (x.L - c.L) + (x.a - c.a) * (x.a - c.a) +
                                (x.b - c.b) * (x.b - c.b));
    }
    total += best;
  }
  return total;
}

std::string write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << text;
  return path.string();
}

}  // namespace

TEST_CASE("grid_sample_lab default count") {
  const auto g = grid_sample_lab(GridSpec{});
  CHECK(g.size() >= 37959);
  CHECK(g.size() <= 39509);
  for (const auto& c : g) REQUIRE(lab_to_srgb(c).in_gamut);
}

TEST_CASE("grid_sample_lab degenerate specs") {
  GridSpec white{100, 100, 5, 0, 0, 2, 0, 0, 2};
  const auto w = grid_sample_lab(white);
  REQUIRE(w.size() == 1);
  CHECK(w[0] == LabColor{100, 0, 0});

  GridSpec dark{0, 0, 5, 100, 100, 2, 100, 100, 2};
  CHECK(lab_to_srgb({0, 100, 100}).in_gamut == false);
  CHECK(grid_sample_lab(dark).empty());

  GridSpec bad;
  bad.a_step = 0;
  CHECK_THROWS_AS(grid_sample_lab(bad), Error);
  bad = GridSpec{};
  bad.L_max = 10;
  CHECK_THROWS_AS(grid_sample_lab(bad), Error);
}

TEST_CASE("grid_sample_lab equals a brute-force lattice filter") {
  GridSpec spec{40, 60, 10, -20, 20, 4, -30, 30, 6};
  std::vector<LabColor> expect;
  for (double L = 40; L <= 60; L += 10)
    for (double a = -20; a <= 20; a += 4)
      for (double b = -30; b <= 30; b += 6)
        if (lab_to_srgb({L, a, b}).in_gamut) expect.push_back({L, a, b});
  CHECK(grid_sample_lab(spec) == expect);
}

TEST_CASE("kmeans with k equal to the sample count returns the samples") {
  testgen::Gen gen(4);
  std::vector<LabColor> xs;
  for (int i = 0; i < 25; ++i) xs.push_back(gen.lab());
  auto cs = kmeans_lab(xs, xs.size(), 9);
  std::sort(cs.begin(), cs.end(), lab_less);
  auto sorted = xs;
  std::sort(sorted.begin(), sorted.end(), lab_less);
  CHECK(cs == sorted);
}

TEST_CASE("kmeans k=1 on a symmetric pair snaps to a member") {
  const std::vector<LabColor> xs{{40, 10, 10}, {60, -10, -10}};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto cs = kmeans_lab(xs, 1, seed);
    REQUIRE(cs.size() == 1);
    CHECK((cs[0] == xs[0] || cs[0] == xs[1]));
  }
}

TEST_CASE("kmeans rejects bad k") {
  const std::vector<LabColor> xs{{40, 10, 10}};
  CHECK_THROWS_AS(kmeans_lab(xs, 2, 1), Error);
  CHECK_THROWS_AS(kmeans_lab(xs, 0, 1), Error);
  CHECK_THROWS_AS(kmeans_lab({}, 1, 1), Error);
}

TEST_CASE("kmeans properties on random clouds") {
  testgen::Gen gen(21);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<LabColor> xs;
    const int n = gen.integer(5, 300);
    for (int i = 0; i < n; ++i) xs.push_back(gen.lab());
    const std::size_t k = static_cast<std::size_t>(gen.integer(1, std::min(n, 12)));
    const std::uint64_t seed = static_cast<std::uint64_t>(gen.integer(0, 1000));
    const auto r = kmeans_lab_detailed(xs, k, seed);
    REQUIRE(r.centroids.size() == k);
    for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
      REQUIRE(r.inertia_history[i] <= r.inertia_history[i - 1] * (1 + 1e-12));
    }
    // Every centroid is a member of its own cluster.
    for (std::size_t c = 0; c < k; ++c) {
      bool member = false;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (r.labels[i] == c && xs[i] == r.centroids[c]) member = true;
      }
      REQUIRE(member);
    }
    const auto again = kmeans_lab_detailed(xs, k, seed);
    REQUIRE(again.centroids == r.centroids);
    REQUIRE(again.labels == r.labels);
  }
}

TEST_CASE("kmeans on the default grid gives 200 distinct in-gamut colours") {
  const auto g = grid_sample_lab(GridSpec{});
  const auto r = kmeans_lab_detailed(g, 200, 32);
  std::set<std::tuple<double, double, double>> seen;
  for (const auto& c : r.centroids) {
    REQUIRE(lab_to_srgb(c).in_gamut);
    seen.insert({c.L, c.a, c.b});
  }
  CHECK(seen.size() == 200);
  CHECK(r.iterations <= 200);
  CHECK(inertia(g, r.centroids) > 0.0);
}

TEST_CASE("max_jnd_subset trivial cases") {
  const JndParams p;
  const std::vector<LabColor> same(5, LabColor{50, 0, 0});
  CHECK(max_jnd_subset(same, 6.0, p).size() == 1);
  const std::vector<LabColor> two{{0, 0, 0}, {100, 0, 0}};
  CHECK(max_jnd_subset(two, 6.0, p).size() == 2);
}

TEST_CASE("max_jnd_subset returns a maximal clique") {
  const JndParams p;
  testgen::Gen gen(8);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<LabColor> xs;
    const int n = gen.integer(1, 80);
    for (int i = 0; i < n; ++i) xs.push_back(gen.lab());
    const double px = gen.uniform(2.0, 30.0);
    const auto sub = max_jnd_subset(xs, px, p);
    REQUIRE_FALSE(sub.empty());
    for (std::size_t i = 0; i < sub.size(); ++i)
      for (std::size_t j = i + 1; j < sub.size(); ++j)
        REQUIRE(oracle_jnd(sub[i], sub[j], px, p));
    for (const auto& x : xs) {
      if (std::find(sub.begin(), sub.end(), x) != sub.end()) continue;
      bool blocked = false;
      for (const auto& s : sub) blocked = blocked || !oracle_jnd(x, s, px, p);
      REQUIRE(blocked);
    }
    REQUIRE(max_jnd_subset(xs, px, p) == sub);
  }
}

TEST_CASE("derivation pipeline with the documented seed") {
  const auto g = grid_sample_lab(GridSpec{});
  const auto cs = kmeans_lab(g, 200, 32);
  const auto sub = max_jnd_subset(cs, kDefaultMarkPx, JndParams{});
  CHECK(sub.size() >= 34);
  CHECK(sub.size() <= 40);
  CHECK(max_jnd_subset(kmeans_lab(g, 200, 32), kDefaultMarkPx, JndParams{}) == sub);
}

TEST_CASE("bundled pools load and validate") {
  const auto pools = load_default_pools(
      {testpaths::data_dir() / "colors.tsv", testpaths::data_dir() / "shapes.tsv"},
      JndParams{});
  REQUIRE(pools.colors.size() == 39);
  REQUIRE(pools.shapes.size() == 39);
  const JndParams p;
  const auto& e = pools.colors.entries();
  for (std::size_t i = 0; i < e.size(); ++i) {
    REQUIRE(e[i].id == static_cast<int>(i));
    REQUIRE(e[i].lab.L >= 25.0);
    REQUIRE(oracle_jnd(e[i].lab, {100, 0, 0}, 6.0, p));
    const GamutResult g = lab_to_srgb(e[i].lab);
    REQUIRE(g.in_gamut);
    for (std::size_t j = i + 1; j < e.size(); ++j)
      REQUIRE(oracle_jnd(e[i].lab, e[j].lab, 6.0, p));
  }
  int manual = 0;
  for (const auto& c : e) manual += c.manual;
  CHECK(manual == 2);
  int per_class[3] = {0, 0, 0};
  for (const auto& s : pools.shapes.entries()) ++per_class[static_cast<int>(s.fill_class)];
  CHECK(per_class[0] == 13);
  CHECK(per_class[1] == 13);
  CHECK(per_class[2] == 13);
}

TEST_CASE("pool files round trip through format/parse") {
  const auto pools = load_default_pools(
      {testpaths::data_dir() / "colors.tsv", testpaths::data_dir() / "shapes.tsv"},
      JndParams{});
  const auto c2 = parse_color_pool(format_color_pool(pools.colors));
  const auto s2 = parse_shape_catalog(format_shape_catalog(pools.shapes));
  CHECK(format_color_pool(c2) == format_color_pool(pools.colors));
  CHECK(format_shape_catalog(s2) == format_shape_catalog(pools.shapes));
}

TEST_CASE("pool loader errors name the offending entry") {
  const std::string header = "# catpaw-colors 1\nid\thex\tL\ta\tb\tdisplay_name\tmanual\n";
  const std::string dup = header +
                          "0\t#000000\t0\t0\t0\tblack\tfalse\n"
                          "0\t#ffffff\t100\t0\t0\twhite\tfalse\n";
  try {
    parse_color_pool(dup);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Validation);
    CHECK(e.field() == "id=0");
    CHECK(std::string(e.what()).find("duplicate color id 0") != std::string::npos);
  }

  CHECK_THROWS_AS(parse_color_pool("id\thex\n"), Error);
  CHECK_THROWS_AS(parse_color_pool(header + "0\t#000000\tx\t0\t0\tblack\tfalse\n"),
                  Error);
  // Gap in ids.
  CHECK_THROWS_AS(parse_color_pool(header + "1\t#000000\t0\t0\t0\tblack\tfalse\n"),
                  Error);

  const auto small = parse_color_pool(
      header + "0\t#7f7f7f\t53.3889\t0\t0\tgray\tfalse\n"
               "1\t#808080\t53.5850\t0\t0\tgray2\tfalse\n");
  try {
    validate_color_pool(small, 6.0, JndParams{}, std::nullopt);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Validation);
    CHECK(e.field() == "color_id=1");
  }

  const auto missing = std::filesystem::temp_directory_path() / "catpaw_missing.tsv";
  std::filesystem::remove(missing);
  try {
    load_default_pools({missing, missing}, JndParams{});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }

  const std::string shapes =
      "# catpaw-shapes 1\nid\tname\tfill_class\tpath\tsource_tool\n"
      "0\tcircle\tfilled\tM0,0Z\tD3\n1\tcircle\tunfilled\tM0,0Z\tD3\n";
  const auto path = write_temp("catpaw_dup_shapes.tsv", shapes);
  CHECK_THROWS_AS(validate_shape_catalog(parse_shape_catalog(shapes), std::nullopt),
                  Error);
  CHECK_THROWS_AS(parse_shape_catalog(
                      "# catpaw-shapes 1\nid\tname\tfill_class\tpath\tsource_tool\n"
                      "0\tcircle\thollow\tM0,0Z\tD3\n"),
                  Error);
  std::filesystem::remove(path);
}
