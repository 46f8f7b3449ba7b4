#include <algorithm>
#include <random>

#include "catpaw/error.hpp"
#include "catpaw/evidence.hpp"
#include "doctest.h"
#include "../support/trials.hpp"

using namespace catpaw;

namespace {

TrialRecord make_trial(std::vector<Marker> cats, int target,
                       std::optional<int> response) {
  TrialRecord t;
  t.trial_id = "x";
  t.group_id = "g";
  t.category_count = static_cast<int>(cats.size());
  t.categories = std::move(cats);
  t.target_index = target;
  t.response_index = response;
  t.correct = response && *response == target;
  return t;
}

Marker C(int c) { return Marker{c, std::nullopt}; }
Marker S(int s) { return Marker{std::nullopt, s}; }
Marker CS(int c, int s) { return Marker{c, s}; }

const char* kHeader =
    "# catpaw-trials 1\n"
    "trial_id\tgroup_id\tcategory_count\tmarkers\ttarget_index\tresponse_index\tcorrect\n";

}  // namespace

TEST_CASE("bin_of boundaries") {
  CHECK(bin_of(2) == CategoryBin::Small);
  CHECK(bin_of(4) == CategoryBin::Small);
  CHECK(bin_of(5) == CategoryBin::Medium);
  CHECK(bin_of(7) == CategoryBin::Medium);
  CHECK(bin_of(8) == CategoryBin::Large);
  CHECK(bin_of(10) == CategoryBin::Large);
  CHECK_THROWS_AS(bin_of(1), Error);
  CHECK_THROWS_AS(bin_of(11), Error);
}

TEST_CASE("pairwise accuracy worked examples") {
  const std::vector<TrialRecord> one{make_trial({C(0), C(1)}, 0, 0)};
  const auto m = pairwise_accuracy(one, Axis::Color, BinSelector::All, 3, 3);
  CHECK(*m.acc(0, 1) == 1.0);
  CHECK(m.trials(0, 1) == 1);
  CHECK_FALSE(m.acc(0, 2).has_value());
  CHECK_FALSE(m.acc(1, 1).has_value());

  const std::vector<TrialRecord> two{make_trial({C(0), C(1)}, 0, 0),
                                     make_trial({C(1), C(0)}, 0, 1)};
  const auto m2 = pairwise_accuracy(two, Axis::Color, BinSelector::All, 3, 3);
  CHECK(*m2.acc(0, 1) == 0.5);
  CHECK(*m2.acc(1, 0) == 0.5);

  // Three categories, one correct answer: every pair gets one correct count.
  const std::vector<TrialRecord> three{make_trial({C(0), C(1), C(2)}, 2, 2)};
  const auto m3 = pairwise_accuracy(three, Axis::Color, BinSelector::Small, 3, 3);
  CHECK(m3.correct(0, 1) == 1);
  CHECK(m3.correct(0, 2) == 1);
  CHECK(m3.correct(1, 2) == 1);
  const auto medium = pairwise_accuracy(three, Axis::Color, BinSelector::Medium, 3, 3);
  CHECK(medium.present_count() == 0);
}

TEST_CASE("redundant trials feed all three matrices") {
  const std::vector<TrialRecord> t{make_trial({CS(0, 2), CS(1, 0)}, 0, 1)};
  const auto ev = build_evidence(t, 3, 3);
  CHECK(ev.matrix(Axis::Color, BinSelector::Small).trials(0, 1) == 1);
  CHECK(ev.matrix(Axis::Shape, BinSelector::Small).trials(2, 0) == 1);
  CHECK(ev.matrix(Axis::Marker, BinSelector::All).trials(marker_index(0, 2, 3),
                                                         marker_index(1, 0, 3)) == 1);
  CHECK(*ev.marker_table(BinSelector::All).acc(marker_index(0, 2, 3)) == 0.0);
  CHECK_FALSE(ev.marker_table(BinSelector::All).acc(marker_index(2, 2, 3)));
}

TEST_CASE("marker accuracy worked examples") {
  const std::vector<TrialRecord> t{make_trial({CS(0, 0), CS(1, 1)}, 1, 1)};
  const auto table = marker_accuracy(t, BinSelector::All, 2, 2);
  CHECK(*table.acc(marker_index(0, 0, 2)) == 1.0);
  CHECK_FALSE(table.acc(marker_index(0, 1, 2)));
}

TEST_CASE("matrix builder equals a brute-force recount") {
  testgen::Gen g(99);
  for (int run = 0; run < 20; ++run) {
    const int nc = g.integer(3, 12);
    const int ns = g.integer(3, 12);
    const auto trials = testgen::random_trials(g, 50, nc, ns);
    const auto ev = build_evidence(trials, nc, ns);
    for (Axis a : {Axis::Color, Axis::Shape, Axis::Marker}) {
      const int n = a == Axis::Color ? nc : a == Axis::Shape ? ns : nc * ns;
      for (int b = 0; b < 4; ++b) {
        const auto sel = static_cast<BinSelector>(b);
        const auto& m = ev.matrix(a, sel);
        REQUIRE(m == pairwise_accuracy(trials, a, sel, nc, ns));
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j) {
            const auto r = testgen::recount_pair(trials, a, sel, i, j, ns);
            REQUIRE(m.trials(i, j) == r.trials);
            REQUIRE(m.correct(i, j) == r.correct);
            REQUIRE(m.trials(j, i) == r.trials);
          }
      }
    }
    for (int b = 0; b < 4; ++b) {
      const auto sel = static_cast<BinSelector>(b);
      const auto& t = ev.marker_table(sel);
      for (int c = 0; c < nc; ++c)
        for (int s = 0; s < ns; ++s) {
          const auto r = testgen::recount_marker(trials, sel, c, s);
          REQUIRE(t.trials[marker_index(c, s, ns)] == r.trials);
          REQUIRE(t.correct[marker_index(c, s, ns)] == r.correct);
        }
    }
  }
}

TEST_CASE("count conservation, order independence and merge") {
  testgen::Gen g(7);
  for (int run = 0; run < 30; ++run) {
    const int nc = g.integer(3, 15), ns = g.integer(3, 15);
    auto trials = testgen::random_trials(g, g.integer(0, 80), nc, ns);
    for (int b = 0; b < 4; ++b) {
      const auto sel = static_cast<BinSelector>(b);
      const auto m = pairwise_accuracy(trials, Axis::Color, sel, nc, ns);
      std::uint64_t sum = 0;
      for (const auto& c : m.present_cells()) sum += c.trials;
      std::uint64_t expect = 0;
      for (const auto& t : trials) {
        if (t.categories[0].color && testgen::in_bin(t.category_count, sel)) {
          expect += static_cast<std::uint64_t>(t.category_count) *
                    (t.category_count - 1) / 2;
        }
      }
      REQUIRE(sum == expect);
    }
    auto shuffled = trials;
    std::shuffle(shuffled.begin(), shuffled.end(), g.engine());
    const auto a = build_evidence(trials, nc, ns);
    const auto b = build_evidence(shuffled, nc, ns);
    REQUIRE(a.pairs == b.pairs);

    const std::size_t cut = trials.empty() ? 0 : static_cast<std::size_t>(
                                                     g.integer(0, static_cast<int>(trials.size())));
    const std::vector<TrialRecord> left(trials.begin(), trials.begin() + cut);
    const std::vector<TrialRecord> right(trials.begin() + cut, trials.end());
    for (Axis ax : {Axis::Color, Axis::Shape, Axis::Marker}) {
      const auto whole = pairwise_accuracy(trials, ax, BinSelector::All, nc, ns);
      const auto merged = PairMatrix::merge(
          pairwise_accuracy(left, ax, BinSelector::All, nc, ns),
          pairwise_accuracy(right, ax, BinSelector::All, nc, ns));
      REQUIRE(merged == whole);
    }
  }
}

TEST_CASE("summary statistics") {
  PairMatrix one(Axis::Color, BinSelector::All, 3);
  one.set_counts(0, 1, 7, 10);
  const auto s1 = summary_stats(one);
  CHECK(s1.mean == doctest::Approx(0.7));
  CHECK(s1.min == doctest::Approx(0.7));
  CHECK(s1.max == doctest::Approx(0.7));
  CHECK(s1.stddev == 0.0);

  PairMatrix two(Axis::Color, BinSelector::All, 3);
  two.set_counts(0, 1, 4, 10);
  two.set_counts(1, 2, 8, 10);
  const auto s2 = summary_stats(two);
  CHECK(s2.mean == doctest::Approx(0.6));
  CHECK(s2.stddev == doctest::Approx(0.2));
  CHECK(s2.cells == 2);

  CHECK_THROWS_AS(summary_stats(PairMatrix(Axis::Color, BinSelector::All, 4)), Error);

  testgen::Gen g(12);
  const auto trials = testgen::random_trials(g, 400, 10, 10);
  const auto m = pairwise_accuracy(trials, Axis::Color, BinSelector::All, 10, 10);
  double sum = 0, lo = 2, hi = -1;
  int cells = 0;
  for (int i = 0; i < 10; ++i)
    for (int j = i + 1; j < 10; ++j) {
      const auto r = testgen::recount_pair(trials, Axis::Color, BinSelector::All, i, j, 10);
      if (!r.trials) continue;
      const double v = double(r.correct) / r.trials;
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      ++cells;
    }
  const double mean = sum / cells;
  double ss = 0;
  for (int i = 0; i < 10; ++i)
    for (int j = i + 1; j < 10; ++j) {
      const auto r = testgen::recount_pair(trials, Axis::Color, BinSelector::All, i, j, 10);
      if (r.trials) ss += std::pow(double(r.correct) / r.trials - mean, 2);
    }
  const auto s = summary_stats(m);
  CHECK(s.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(s.min == lo);
  CHECK(s.max == hi);
  CHECK(s.stddev == doctest::Approx(std::sqrt(ss / cells)).epsilon(1e-12));
}

TEST_CASE("trial log parsing") {
  CHECK(parse_trials("", 39, 39).records.empty());
  CHECK(parse_trials("\n  \n", 39, 39).records.empty());

  const std::string one = std::string(kHeader) + "t1\tg1\t3\tc4/s2,c7/s10,c1/s0\t1\t1\t1\n";
  const auto r = parse_trials(one, 39, 39);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].categories[1] == CS(7, 10));
  CHECK(r.records[0].correct);

  const std::string timeout = std::string(kHeader) + "t1\tg1\t2\tc4,c7\t1\ttimeout\t0\n";
  const auto rt = parse_trials(timeout, 39, 39);
  CHECK_FALSE(rt.records[0].response_index);
  CHECK_FALSE(rt.records[0].correct);
  // A timeout can never count as correct.
  CHECK_THROWS_AS(parse_trials(std::string(kHeader) + "t1\tg1\t2\tc4,c7\t1\ttimeout\t1\n", 39, 39),
                  Error);

  try {
    parse_trials(std::string(kHeader) + "t1\tg1\t2\tc4,c7\t0\t0\t1\nt2\tg1\t2\tc99,c7\t0\t0\t1\n",
                 39, 39);
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownId);
    CHECK(e.field() == "color_id=99");
    const std::string msg = e.what();
    CHECK(msg.find("line 4") != std::string::npos);
    CHECK(msg.find("99") != std::string::npos);
  }

  const std::string extra =
      "# catpaw-trials 1\n"
      "trial_id\tgroup_id\tcategory_count\tmarkers\ttarget_index\tresponse_index\tcorrect\trt_ms\n"
      "t1\tg1\t2\ts1,s2\t0\t1\t0\t812\n";
  const auto re = parse_trials(extra, 39, 39);
  CHECK(re.records.size() == 1);
  REQUIRE(re.warnings.size() == 1);
  CHECK(re.warnings[0].find("rt_ms") != std::string::npos);

  const char* bad[] = {
      "t1\tg1\t3\tc1,c2\t0\t0\t1\n",        // count mismatch
      "t1\tg1\t2\tc1,c1\t0\t0\t1\n",        // repeated colour
      "t1\tg1\t2\tc1,s2\t0\t0\t1\n",        // mixed channels
      "t1\tg1\t2\tc1,c2\t2\t0\t0\n",        // target out of range
      "t1\tg1\t2\tc1,c2\t0\t1\t1\n",        // correct flag wrong
      "t1\tg1\t11\tc1,c2\t0\t0\t1\n",       // too many categories
      "t1\tg1\t2\tx1,c2\t0\t0\t1\n",        // malformed marker
      "t1\tg1\t2\tc1,c2\t0\t0\n",           // missing field
  };
  for (const char* line : bad) {
    CAPTURE(line);
    CHECK_THROWS_AS(parse_trials(std::string(kHeader) + line, 39, 39), Error);
  }
  CHECK_THROWS_AS(parse_trials("# catpaw-trials 2\n", 39, 39), Error);
  CHECK_THROWS_AS(ingest_trials("/nonexistent/catpaw.tsv", 39, 39), Error);
}

TEST_CASE("trial logs round trip") {
  testgen::Gen g(31);
  const auto trials = testgen::random_trials(g, 200, 39, 39);
  const auto back = parse_trials(format_trials(trials), 39, 39).records;
  REQUIRE(back.size() == trials.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].categories == trials[i].categories);
    CHECK(back[i].response_index == trials[i].response_index);
    CHECK(back[i].correct == trials[i].correct);
  }
}

TEST_CASE("rectangular matrix export") {
  PairMatrix m(Axis::Shape, BinSelector::Medium, 3);
  m.set_counts(0, 2, 1, 4);
  const std::string table = format_matrix_table(m);
  CHECK(table ==
        "shape/Medium\t0\t1\t2\n"
        "0\t-\t\t0.250000\n"
        "1\t\t-\t\n"
        "2\t0.250000\t\t-\n");
}
