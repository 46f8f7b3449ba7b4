#pragma once

// Palettes with known scores and trial logs whose empirical accuracies are
// chosen by the test.

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "catpaw/analysis.hpp"
#include "gen.hpp"

namespace rankfx {

struct Fixture {
  std::vector<catpaw::Palette> palettes;
  std::map<std::string, double> score;  // canonical key -> model score
};

inline Fixture colour_sets(testgen::Gen& g, const std::vector<int>& counts,
                           int per_count, int pool = 39) {
  Fixture f;
  for (int n : counts) {
    int made = 0;
    while (made < per_count) {
      catpaw::Palette p{catpaw::Encoding::ColorOnly, {}};
      auto ids = g.distinct(pool, n);
      std::sort(ids.begin(), ids.end());
      for (int c : ids) p.entries.push_back({c, std::nullopt});
      const auto key = catpaw::canonical_key(p);
      if (f.score.count(key)) continue;
      f.score[key] = 0;
      f.palettes.push_back(p);
      ++made;
    }
  }
  return f;
}

// `trials` records per palette, round(acc * trials) of them correct.
inline std::vector<catpaw::TrialRecord> trials_with_accuracy(
    const std::vector<catpaw::Palette>& ps,
    const std::function<double(const catpaw::Palette&)>& acc, int trials) {
  std::vector<catpaw::TrialRecord> out;
  int id = 0;
  for (const auto& p : ps) {
    const double a = std::clamp(acc(p), 0.0, 1.0);
    const int correct = static_cast<int>(std::lround(a * trials));
    for (int t = 0; t < trials; ++t) {
      catpaw::TrialRecord r;
      r.trial_id = "t" + std::to_string(id++);
      r.group_id = "g0";
      r.category_count = static_cast<int>(p.n());
      r.categories = p.entries;
      r.target_index = 0;
      r.correct = t < correct;
      r.response_index = r.correct ? 0 : 1;
      out.push_back(std::move(r));
    }
  }
  return out;
}

inline catpaw::PaletteScorer table_scorer(const Fixture& f) {
  return [&f](const catpaw::Palette& p) { return f.score.at(catpaw::canonical_key(p)); };
}

}  // namespace rankfx
