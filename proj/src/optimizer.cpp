#include "catpaw/optimizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <unordered_map>

#include "catpaw/error.hpp"

namespace catpaw {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string join_ids(const std::set<int>& ids) {
  std::string out;
  for (int id : ids) {
    if (!out.empty()) out += ",";
    out += std::to_string(id);
  }
  return out;
}

std::uint64_t choose(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > (std::uint64_t{1} << 62)) return std::uint64_t{1} << 62;
  }
  return r;
}

void check_n(std::size_t n) {
  if (n < static_cast<std::size_t>(kMinCategories) ||
      n > static_cast<std::size_t>(kMaxCategories)) {
    throw Error(ErrorCode::InvalidArgument,
                "n must lie in [2, 10], got " + std::to_string(n), "n");
  }
}

bool better(double sx, const std::string& kx, double sy, const std::string& ky) {
  if (sx != sy) return sx > sy;
  return kx < ky;
}

void sort_and_rank(std::vector<ScoredPalette>& v) {
  std::vector<std::pair<std::string, std::size_t>> keys;
  keys.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    keys.emplace_back(canonical_key(v[i].palette), i);
  }
  std::sort(keys.begin(), keys.end(), [&](const auto& x, const auto& y) {
    return better(v[x.second].score, x.first, v[y.second].score, y.first);
  });
  std::vector<ScoredPalette> out;
  out.reserve(v.size());
  for (const auto& k : keys) out.push_back(std::move(v[k.second]));
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i + 1);
  v = std::move(out);
}

Palette single_palette(Axis axis, std::vector<int> ids) {
  std::sort(ids.begin(), ids.end());
  Palette p;
  p.encoding = axis == Axis::Color ? Encoding::ColorOnly : Encoding::ShapeOnly;
  for (int id : ids) {
    Marker m;
    if (axis == Axis::Color) m.color = id;
    else m.shape = id;
    p.entries.push_back(m);
  }
  return p;
}

// Best-k subsets of one sample, all containing `required`.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) {}

  void offer(double score, const std::vector<int>& ids) {
    if (items_.size() == k_ && score < items_.back().score) return;
    std::vector<int> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    Item it{score, std::move(sorted)};
    auto pos = std::lower_bound(items_.begin(), items_.end(), it,
                                [](const Item& x, const Item& y) {
                                  if (x.score != y.score) return x.score > y.score;
                                  return x.ids < y.ids;
                                });
    if (pos != items_.end() && pos->score == it.score && pos->ids == it.ids) {
      return;
    }
    if (items_.size() == k_ && pos == items_.end()) return;
    items_.insert(pos, std::move(it));
    if (items_.size() > k_) items_.pop_back();
  }

  struct Item {
    double score;
    std::vector<int> ids;
  };
  const std::vector<Item>& items() const { return items_; }

 private:
  std::size_t k_;
  std::vector<Item> items_;
};

void enumerate_subsets(const PairScores& s, const std::vector<int>& required,
                       const std::vector<int>& free, std::size_t n, TopK& top) {
  const std::size_t pairs = n * (n - 1) / 2;
  double base = 0.0;
  for (std::size_t i = 0; i < required.size(); ++i) {
    for (std::size_t j = i + 1; j < required.size(); ++j) {
      const double v = s.at(required[i], required[j]);
      if (std::isnan(v)) return;
      base += v;
    }
  }
  // Contribution of each free id against the required set.
  std::vector<double> against(free.size(), 0.0);
  for (std::size_t f = 0; f < free.size(); ++f) {
    for (int r : required) {
      against[f] += s.at(free[f], r);
    }
  }
  std::vector<int> chosen = required;
  std::vector<std::size_t> stack;
  const std::size_t need = n - required.size();
  auto rec = [&](auto&& self, std::size_t start, double sum) -> void {
    if (stack.size() == need) {
      top.offer(sum / static_cast<double>(pairs), chosen);
      return;
    }
    const std::size_t remaining = need - stack.size();
    for (std::size_t f = start; f + remaining <= free.size(); ++f) {
      double add = against[f];
      if (std::isnan(add)) continue;
      for (std::size_t k : stack) add += s.at(free[f], free[k]);
      if (std::isnan(add)) continue;
      stack.push_back(f);
      chosen.push_back(free[f]);
      self(self, f + 1, sum + add);
      chosen.pop_back();
      stack.pop_back();
    }
  };
  rec(rec, 0, base);
}

void beam_subsets(const PairScores& s, const std::vector<int>& required,
                  const std::vector<int>& free, std::size_t n,
                  std::size_t width, TopK& top) {
  struct State {
    std::vector<std::size_t> picks;
    double sum;
    std::size_t pairs;
  };
  double base = 0.0;
  for (std::size_t i = 0; i < required.size(); ++i) {
    for (std::size_t j = i + 1; j < required.size(); ++j) {
      const double v = s.at(required[i], required[j]);
      if (std::isnan(v)) return;
      base += v;
    }
  }
  const std::size_t need = n - required.size();
  const std::size_t nr = required.size();
  std::vector<State> beam{{{}, base, nr < 2 ? 0 : nr * (nr - 1) / 2}};
  for (std::size_t step = 0; step < need; ++step) {
    std::vector<State> next;
    for (const auto& st : beam) {
      const std::size_t start = st.picks.empty() ? 0 : st.picks.back() + 1;
      for (std::size_t f = start; f + (need - step) <= free.size(); ++f) {
        double add = 0.0;
        for (int r : required) add += s.at(free[f], r);
        for (std::size_t k : st.picks) add += s.at(free[f], free[k]);
        if (std::isnan(add)) continue;
        State ns{st.picks, st.sum + add,
                 st.pairs + required.size() + st.picks.size()};
        ns.picks.push_back(f);
        next.push_back(std::move(ns));
      }
    }
    auto mean = [](const State& x) {
      return x.pairs ? x.sum / static_cast<double>(x.pairs) : 0.0;
    };
    std::sort(next.begin(), next.end(), [&](const State& x, const State& y) {
      const double mx = mean(x), my = mean(y);
      if (mx != my) return mx > my;
      return x.picks < y.picks;
    });
    if (next.size() > width) next.resize(width);
    beam = std::move(next);
  }
  const double pairs = static_cast<double>(n * (n - 1) / 2);
  for (const auto& st : beam) {
    std::vector<int> ids = required;
    for (std::size_t f : st.picks) ids.push_back(free[f]);
    top.offer(st.sum / pairs, ids);
  }
}

double canonical_subset_score(std::vector<int> ids, const PairScores& s) {
  std::sort(ids.begin(), ids.end());
  return score_subset(ids, s);
}

}  // namespace

std::string_view encoding_name(Encoding e) {
  switch (e) {
    case Encoding::ColorOnly: return "color";
    case Encoding::ShapeOnly: return "shape";
    case Encoding::Redundant: return "redundant";
  }
  return "color";
}

Encoding parse_encoding(std::string_view raw) {
  std::string s(raw);
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (s == "color" || s == "color-only" || s == "color_only") return Encoding::ColorOnly;
  if (s == "shape" || s == "shape-only" || s == "shape_only") return Encoding::ShapeOnly;
  if (s == "redundant") return Encoding::Redundant;
  throw Error(ErrorCode::InvalidArgument,
              "unknown encoding '" + std::string(raw) + "'", "type");
}

void validate_palette(const Palette& p, std::size_t n_colors,
                      std::size_t n_shapes) {
  check_n(p.n());
  std::set<int> colors, shapes;
  for (const auto& m : p.entries) {
    const bool want_color = p.encoding != Encoding::ShapeOnly;
    const bool want_shape = p.encoding != Encoding::ColorOnly;
    if (m.color.has_value() != want_color || m.shape.has_value() != want_shape) {
      throw Error(ErrorCode::Validation,
                  "entry " + format_marker(m) + " does not match encoding " +
                      std::string(encoding_name(p.encoding)),
                  "entries");
    }
    if (m.color) {
      if (*m.color < 0 || static_cast<std::size_t>(*m.color) >= n_colors) {
        throw Error(ErrorCode::UnknownId,
                    "unknown color_id " + std::to_string(*m.color),
                    "color_id=" + std::to_string(*m.color));
      }
      if (!colors.insert(*m.color).second) {
        throw Error(ErrorCode::Validation,
                    "color_id " + std::to_string(*m.color) + " repeats",
                    "entries");
      }
    }
    if (m.shape) {
      if (*m.shape < 0 || static_cast<std::size_t>(*m.shape) >= n_shapes) {
        throw Error(ErrorCode::UnknownId,
                    "unknown shape_id " + std::to_string(*m.shape),
                    "shape_id=" + std::to_string(*m.shape));
      }
      if (!shapes.insert(*m.shape).second) {
        throw Error(ErrorCode::Validation,
                    "shape_id " + std::to_string(*m.shape) + " repeats",
                    "entries");
      }
    }
  }
}

std::string canonical_key(const Palette& p) {
  std::vector<Marker> sorted = p.entries;
  std::sort(sorted.begin(), sorted.end());
  std::string out(encoding_name(p.encoding));
  out += ":";
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i) out += ",";
    out += format_marker(sorted[i]);
  }
  return out;
}

void ScoringWeights::validate() const {
  const double w[] = {marker_pair_mean,  marker_individual_mean,
                      color_pair_mean,   shape_pair_mean,
                      lightness_variance, shape_type_mix};
  double sum = 0.0;
  for (double x : w) {
    if (!std::isfinite(x) || x < 0.0) {
      throw Error(ErrorCode::InvalidArgument,
                  "weights must be finite and non-negative", "weights");
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "weights must sum to 1", "weights");
  }
}

void OptimizerConfig::validate() const {
  weights.validate();
  if (min_obs < 1) {
    throw Error(ErrorCode::InvalidArgument, "min_obs must be at least 1",
                "min_obs");
  }
  if (shortlist < 1 || repetitions < 1 || beam_width < 1 || top_sets < 1 ||
      permutations < 1 || enumeration_cutoff < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "optimizer limits must be positive", "optimizer");
  }
}

void Constraints::validate(Encoding encoding, std::size_t n,
                           std::size_t n_colors, std::size_t n_shapes) const {
  check_n(n);
  auto check_ids = [](const auto& ids, std::size_t limit, const char* field) {
    for (int id : ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= limit) {
        throw Error(ErrorCode::UnknownId,
                    std::string("unknown id ") + std::to_string(id) + " in " +
                        field,
                    field);
      }
    }
  };
  check_ids(required_colors, n_colors, "required_colors");
  check_ids(excluded_colors, n_colors, "excluded_colors");
  check_ids(required_shapes, n_shapes, "required_shapes");
  check_ids(excluded_shapes, n_shapes, "excluded_shapes");
  if (candidate_colors) check_ids(*candidate_colors, n_colors, "candidate_colors");
  if (candidate_shapes) check_ids(*candidate_shapes, n_shapes, "candidate_shapes");

  std::set<int> req_c = required_colors;
  std::set<int> req_s = required_shapes;
  std::set<int> pin_c, pin_s;
  for (const auto& m : required_markers) {
    if (!m.color || !m.shape) {
      throw Error(ErrorCode::Constraint,
                  "required markers need both a colour and a shape",
                  "required_markers");
    }
    check_ids(std::vector<int>{*m.color}, n_colors, "required_markers");
    check_ids(std::vector<int>{*m.shape}, n_shapes, "required_markers");
    if (!pin_c.insert(*m.color).second || !pin_s.insert(*m.shape).second) {
      throw Error(ErrorCode::Constraint,
                  "required markers repeat a colour or shape",
                  "required_markers");
    }
    req_c.insert(*m.color);
    req_s.insert(*m.shape);
  }
  if (encoding == Encoding::ColorOnly &&
      (!required_shapes.empty() || !required_markers.empty())) {
    throw Error(ErrorCode::Constraint,
                "colour-only palettes cannot require shapes",
                required_markers.empty() ? "required_shapes" : "required_markers");
  }
  if (encoding == Encoding::ShapeOnly &&
      (!required_colors.empty() || !required_markers.empty())) {
    throw Error(ErrorCode::Constraint,
                "shape-only palettes cannot require colours",
                required_markers.empty() ? "required_colors" : "required_markers");
  }
  if (req_c.size() > n) {
    throw Error(ErrorCode::Constraint,
                std::to_string(req_c.size()) + " required colours exceed n = " +
                    std::to_string(n),
                "required_colors");
  }
  if (req_s.size() > n) {
    throw Error(ErrorCode::Constraint,
                std::to_string(req_s.size()) + " required shapes exceed n = " +
                    std::to_string(n),
                "required_shapes");
  }
  // A required colour that is not pinned still needs a free shape slot.
  for (int c : req_c) {
    if (excluded_colors.count(c)) {
      throw Error(ErrorCode::Constraint,
                  "colour " + std::to_string(c) + " is both required and excluded",
                  "required_colors");
    }
  }
  for (int s : req_s) {
    if (excluded_shapes.count(s)) {
      throw Error(ErrorCode::Constraint,
                  "shape " + std::to_string(s) + " is both required and excluded",
                  "required_shapes");
    }
  }
  if (candidate_colors) {
    const std::set<int> cand(candidate_colors->begin(), candidate_colors->end());
    for (int c : req_c) {
      if (!cand.count(c)) {
        throw Error(ErrorCode::Constraint,
                    "required colour " + std::to_string(c) +
                        " is outside the candidate pool",
                    "candidate_colors");
      }
    }
  }
  if (candidate_shapes) {
    const std::set<int> cand(candidate_shapes->begin(), candidate_shapes->end());
    for (int s : req_s) {
      if (!cand.count(s)) {
        throw Error(ErrorCode::Constraint,
                    "required shape " + std::to_string(s) +
                        " is outside the candidate pool",
                    "candidate_shapes");
      }
    }
  }
  if (encoding != Encoding::ShapeOnly && allowed_colors(n_colors).size() < n) {
    throw Error(ErrorCode::Constraint,
                "fewer than n colours remain after exclusions",
                "excluded_colors");
  }
  if (encoding != Encoding::ColorOnly && allowed_shapes(n_shapes).size() < n) {
    throw Error(ErrorCode::Constraint,
                "fewer than n shapes remain after exclusions",
                "excluded_shapes");
  }
}

std::vector<ColorId> Constraints::allowed_colors(std::size_t n_colors) const {
  std::set<int> base;
  if (candidate_colors) {
    base.insert(candidate_colors->begin(), candidate_colors->end());
  } else {
    for (std::size_t i = 0; i < n_colors; ++i) base.insert(static_cast<int>(i));
  }
  std::vector<ColorId> out;
  for (int c : base) {
    if (!excluded_colors.count(c)) out.push_back(c);
  }
  return out;
}

std::vector<ShapeId> Constraints::allowed_shapes(std::size_t n_shapes) const {
  std::set<int> base;
  if (candidate_shapes) {
    base.insert(candidate_shapes->begin(), candidate_shapes->end());
  } else {
    for (std::size_t i = 0; i < n_shapes; ++i) base.insert(static_cast<int>(i));
  }
  std::vector<ShapeId> out;
  for (int s : base) {
    if (!excluded_shapes.count(s)) out.push_back(s);
  }
  return out;
}

bool Constraints::admits(const Palette& p) const {
  std::set<int> colors, shapes;
  for (const auto& m : p.entries) {
    if (m.color) {
      if (excluded_colors.count(*m.color)) return false;
      if (candidate_colors &&
          std::find(candidate_colors->begin(), candidate_colors->end(),
                    *m.color) == candidate_colors->end()) {
        return false;
      }
      colors.insert(*m.color);
    }
    if (m.shape) {
      if (excluded_shapes.count(*m.shape)) return false;
      if (candidate_shapes &&
          std::find(candidate_shapes->begin(), candidate_shapes->end(),
                    *m.shape) == candidate_shapes->end()) {
        return false;
      }
      shapes.insert(*m.shape);
    }
  }
  for (int c : required_colors) {
    if (!colors.count(c)) return false;
  }
  for (int s : required_shapes) {
    if (!shapes.count(s)) return false;
  }
  for (const auto& pin : required_markers) {
    if (std::find(p.entries.begin(), p.entries.end(), pin) == p.entries.end()) {
      return false;
    }
  }
  return true;
}

PairScores::PairScores(const EvidenceSet& ev, Axis axis,
                       std::size_t category_count, std::size_t min_obs) {
  const BinSelector own =
      to_selector(bin_of(static_cast<int>(category_count)));
  const PairMatrix& m = ev.matrix(axis, own);
  const PairMatrix& all = ev.matrix(axis, BinSelector::All);
  n_ = m.n();
  v_.assign(n_ * n_, kNaN);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) {
      double v = kNaN;
      if (m.trials(i, j) >= min_obs) {
        v = *m.acc(i, j);
      } else if (all.trials(i, j) >= min_obs) {
        v = *all.acc(i, j);
      }
      v_[i * n_ + j] = v;
      v_[j * n_ + i] = v;
    }
  }
}

PairScores PairScores::from_matrix(const PairMatrix& m, std::size_t min_obs) {
  PairScores s;
  s.n_ = m.n();
  s.v_.assign(s.n_ * s.n_, kNaN);
  for (std::size_t i = 0; i < s.n_; ++i) {
    for (std::size_t j = i + 1; j < s.n_; ++j) {
      if (m.trials(i, j) >= min_obs) s.set(i, j, *m.acc(i, j));
    }
  }
  return s;
}

bool PairScores::has(std::size_t i, std::size_t j) const {
  return i < n_ && j < n_ && !std::isnan(v_[i * n_ + j]);
}

void PairScores::set(std::size_t i, std::size_t j, double v) {
  v_[i * n_ + j] = v;
  v_[j * n_ + i] = v;
}

double score_subset(std::span<const int> ids, const PairMatrix& m,
                    std::size_t min_obs) {
  if (ids.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "need at least two ids", "ids");
  }
  double sum = 0.0;
  for (std::size_t x = 0; x < ids.size(); ++x) {
    for (std::size_t y = x + 1; y < ids.size(); ++y) {
      const auto i = static_cast<std::size_t>(ids[x]);
      const auto j = static_cast<std::size_t>(ids[y]);
      if (i >= m.n() || j >= m.n() || m.trials(i, j) < min_obs ||
          !m.acc(i, j)) {
        const std::string pair =
            std::to_string(ids[x]) + "-" + std::to_string(ids[y]);
        throw Error(ErrorCode::MissingEvidence,
                    "no usable evidence for pair " + pair, "pair=" + pair);
      }
      sum += *m.acc(i, j);
    }
  }
  return sum / static_cast<double>(ids.size() * (ids.size() - 1) / 2);
}

double score_subset(std::span<const int> ids, const PairScores& s) {
  if (ids.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "need at least two ids", "ids");
  }
  double sum = 0.0;
  for (std::size_t x = 0; x < ids.size(); ++x) {
    for (std::size_t y = x + 1; y < ids.size(); ++y) {
      const auto i = static_cast<std::size_t>(ids[x]);
      const auto j = static_cast<std::size_t>(ids[y]);
      if (!s.has(i, j)) {
        const std::string pair =
            std::to_string(ids[x]) + "-" + std::to_string(ids[y]);
        throw Error(ErrorCode::MissingEvidence,
                    "no usable evidence for pair " + pair, "pair=" + pair);
      }
      sum += s.at(i, j);
    }
  }
  return sum / static_cast<double>(ids.size() * (ids.size() - 1) / 2);
}

std::optional<double> Model::pair(Axis axis, std::size_t category_count,
                                  std::size_t i, std::size_t j) const {
  const BinSelector own =
      to_selector(bin_of(static_cast<int>(category_count)));
  const PairMatrix& m = evidence->matrix(axis, own);
  if (m.trials(i, j) >= config.min_obs) return m.acc(i, j);
  const PairMatrix& all = evidence->matrix(axis, BinSelector::All);
  if (all.trials(i, j) >= config.min_obs) return all.acc(i, j);
  return std::nullopt;
}

std::optional<double> Model::marker(std::size_t category_count, ColorId c,
                                    ShapeId s) const {
  const std::size_t k = marker_index(c, s, shapes->size());
  const BinSelector own =
      to_selector(bin_of(static_cast<int>(category_count)));
  const auto& t = evidence->marker_table(own);
  if (k < t.trials.size() && t.trials[k] >= config.min_obs) return t.acc(k);
  const auto& all = evidence->marker_table(BinSelector::All);
  if (k < all.trials.size() && all.trials[k] >= config.min_obs) return all.acc(k);
  return std::nullopt;
}

std::vector<ScoredPalette> generate_single_channel(
    std::size_t n, Axis axis, const PairScores& scores,
    const Constraints& constraints, std::size_t k_out, std::uint64_t seed,
    const OptimizerConfig& config) {
  if (axis == Axis::Marker) {
    throw Error(ErrorCode::InvalidArgument,
                "single-channel generation needs the colour or shape axis",
                "axis");
  }
  if (k_out < 1) {
    throw Error(ErrorCode::InvalidArgument, "k must be at least 1", "k");
  }
  const Encoding enc =
      axis == Axis::Color ? Encoding::ColorOnly : Encoding::ShapeOnly;
  constraints.validate(enc, n, axis == Axis::Color ? scores.n() : 0,
                       axis == Axis::Shape ? scores.n() : 0);
  const std::vector<int> allowed = axis == Axis::Color
                                       ? constraints.allowed_colors(scores.n())
                                       : constraints.allowed_shapes(scores.n());
  const std::set<int>& req_set = axis == Axis::Color
                                     ? constraints.required_colors
                                     : constraints.required_shapes;
  const std::vector<int> required(req_set.begin(), req_set.end());
  std::vector<int> free;
  for (int id : allowed) {
    if (!req_set.count(id)) free.push_back(id);
  }
  const std::size_t half = (allowed.size() + 1) / 2;
  const std::size_t sample_size = std::min(allowed.size(), std::max(n, half));
  const std::size_t free_take = sample_size - required.size();

  std::mt19937_64 rng(seed);
  std::map<std::vector<int>, double> found;
  for (int rep = 0; rep < config.repetitions; ++rep) {
    std::vector<int> pool = free;
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(std::min(free_take, pool.size()));
    std::sort(pool.begin(), pool.end());
    TopK top(k_out);
    const std::size_t need = n - required.size();
    if (choose(pool.size(), need) <= config.enumeration_cutoff) {
      enumerate_subsets(scores, required, pool, n, top);
    } else {
      beam_subsets(scores, required, pool, n, config.beam_width, top);
    }
    for (const auto& it : top.items()) found.emplace(it.ids, 0.0);
  }
  if (found.empty()) {
    throw Error(ErrorCode::MissingEvidence,
                "no scoreable " + std::string(axis_name(axis)) +
                    " subset of size " + std::to_string(n),
                std::string(axis_name(axis)) + "_matrix");
  }
  std::vector<ScoredPalette> out;
  out.reserve(found.size());
  for (const auto& [ids, unused] : found) {
    ScoredPalette sp;
    sp.palette = single_palette(axis, ids);
    sp.score = canonical_subset_score(ids, scores);
    if (axis == Axis::Color) sp.components.color_pair_mean = sp.score;
    else sp.components.shape_pair_mean = sp.score;
    out.push_back(std::move(sp));
  }
  sort_and_rank(out);
  if (out.size() > k_out) out.resize(k_out);
  return out;
}

double permutation_cosine(std::span<const int> x, std::span<const int> y) {
  if (x.size() != y.size() || x.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                "permutations must be non-empty and equally long", "perm");
  }
  std::size_t agree = 0;
  for (std::size_t i = 0; i < x.size(); ++i) agree += x[i] == y[i];
  return static_cast<double>(agree) / static_cast<double>(x.size());
}

namespace {

std::uint64_t factorial(std::size_t n) {
  std::uint64_t f = 1;
  for (std::size_t i = 2; i <= n; ++i) f *= i;
  return f;
}

std::vector<std::vector<int>> greedy_diverse(std::size_t n, std::size_t m) {
  const std::uint64_t total = factorial(n);
  std::vector<std::uint8_t> max_agree(total, 0);
  std::vector<char> taken(total, 0);
  std::vector<std::vector<int>> picks;
  std::vector<int> identity(n);
  std::iota(identity.begin(), identity.end(), 0);
  picks.push_back(identity);
  taken[0] = 1;
  while (picks.size() < m) {
    const std::vector<int>& last = picks.back();
    std::vector<int> perm = identity;
    std::uint64_t best_idx = total;
    std::uint8_t best = 255;
    std::vector<int> best_perm;
    std::uint64_t idx = 0;
    do {
      std::uint8_t agree = 0;
      for (std::size_t i = 0; i < n; ++i) agree += perm[i] == last[i];
      if (agree > max_agree[idx]) max_agree[idx] = agree;
      if (!taken[idx] && max_agree[idx] < best) {
        best = max_agree[idx];
        best_idx = idx;
        best_perm = perm;
      }
      ++idx;
    } while (std::next_permutation(perm.begin(), perm.end()));
    taken[best_idx] = 1;
    picks.push_back(std::move(best_perm));
  }
  return picks;
}

}  // namespace

DiversePermutations diverse_permutations(std::size_t n, std::size_t m) {
  if (m < 1) {
    throw Error(ErrorCode::InvalidArgument, "m must be at least 1", "m");
  }
  if (n > static_cast<std::size_t>(kMaxCategories)) {
    throw Error(ErrorCode::InvalidArgument, "n must be at most 10", "n");
  }
  DiversePermutations out;
  const std::uint64_t total = factorial(n);
  if (m >= total) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      out.perms.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
    out.truncated = m > total;
    return out;
  }
  // The greedy order does not depend on m, so each n keeps its longest run.
  static std::mutex mu;
  static std::unordered_map<std::size_t, std::vector<std::vector<int>>> cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end() && it->second.size() >= m) {
      out.perms.assign(it->second.begin(), it->second.begin() + m);
      return out;
    }
  }
  auto picks = greedy_diverse(n, m);
  {
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (slot.size() < picks.size()) slot = picks;
  }
  out.perms = std::move(picks);
  return out;
}

std::vector<std::vector<Marker>> diverse_assignments(
    std::span<const ColorId> colors, std::span<const ShapeId> shapes,
    std::size_t m) {
  if (colors.size() != shapes.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "colour and shape lists must have equal length", "shapes");
  }
  const auto perms = diverse_permutations(colors.size(), m);
  std::vector<std::vector<Marker>> out;
  for (const auto& p : perms.perms) {
    std::vector<Marker> a;
    for (std::size_t i = 0; i < colors.size(); ++i) {
      a.push_back({colors[i], shapes[static_cast<std::size_t>(p[i])]});
    }
    out.push_back(std::move(a));
  }
  return out;
}

namespace {

[[noreturn]] void missing(const std::string& what, const std::string& field) {
  throw Error(ErrorCode::MissingEvidence, "no usable evidence for " + what,
              field);
}

double pair_mean(const Model& model, Axis axis, std::size_t n,
                 const std::vector<std::size_t>& ids) {
  double sum = 0.0;
  for (std::size_t x = 0; x < ids.size(); ++x) {
    for (std::size_t y = x + 1; y < ids.size(); ++y) {
      const auto v = model.pair(axis, n, ids[x], ids[y]);
      if (!v) {
        const std::string pair =
            std::to_string(ids[x]) + "-" + std::to_string(ids[y]);
        missing(std::string(axis_name(axis)) + " pair " + pair,
                std::string(axis_name(axis)) + "_pair=" + pair);
      }
      sum += *v;
    }
  }
  return sum / static_cast<double>(ids.size() * (ids.size() - 1) / 2);
}

struct MarkerLevel {
  double pair_mean;
  double individual_mean;
};

MarkerLevel marker_level(std::span<const Marker> a, const Model& model) {
  const std::size_t n = a.size();
  std::vector<std::size_t> idx;
  double ind = 0.0;
  for (const auto& m : a) {
    idx.push_back(marker_index(*m.color, *m.shape, model.shapes->size()));
    const auto v = model.marker(n, *m.color, *m.shape);
    if (!v) missing("marker " + format_marker(m), "marker=" + format_marker(m));
    ind += *v;
  }
  return {pair_mean(model, Axis::Marker, n, idx),
          ind / static_cast<double>(n)};
}

double weighted(const ScoreComponents& c, const ScoringWeights& w) {
  return w.marker_pair_mean * *c.marker_pair_mean +
         w.marker_individual_mean * *c.marker_individual_mean +
         w.color_pair_mean * *c.color_pair_mean +
         w.shape_pair_mean * *c.shape_pair_mean +
         w.lightness_variance * *c.lightness_variance +
         w.shape_type_mix * *c.shape_type_mix;
}

std::vector<Marker> sorted_markers(std::span<const Marker> a) {
  std::vector<Marker> v(a.begin(), a.end());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

ScoredPalette score_redundant(std::span<const Marker> assignment,
                              const Model& model) {
  Palette p;
  p.encoding = Encoding::Redundant;
  p.entries = sorted_markers(assignment);
  validate_palette(p, model.colors->size(), model.shapes->size());
  const std::size_t n = p.n();

  ScoredPalette sp;
  const MarkerLevel ml = marker_level(p.entries, model);
  sp.components.marker_pair_mean = ml.pair_mean;
  sp.components.marker_individual_mean = ml.individual_mean;

  std::vector<std::size_t> cs, ss;
  for (const auto& m : p.entries) {
    cs.push_back(static_cast<std::size_t>(*m.color));
    ss.push_back(static_cast<std::size_t>(*m.shape));
  }
  std::sort(cs.begin(), cs.end());
  std::sort(ss.begin(), ss.end());
  sp.components.color_pair_mean = pair_mean(model, Axis::Color, n, cs);
  sp.components.shape_pair_mean = pair_mean(model, Axis::Shape, n, ss);

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& e : model.colors->entries()) {
    lo = std::min(lo, e.lab.L);
    hi = std::max(hi, e.lab.L);
  }
  double mean = 0.0;
  for (std::size_t c : cs) mean += model.colors->at(static_cast<int>(c)).lab.L;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t c : cs) {
    const double d = model.colors->at(static_cast<int>(c)).lab.L - mean;
    var += d * d;
  }
  var /= static_cast<double>(n);
  // Population variance of values in [lo, hi] never exceeds ((hi - lo) / 2)^2.
  const double cap = (hi - lo) * (hi - lo) / 4.0;
  sp.components.lightness_variance = cap > 0.0 ? std::min(1.0, var / cap) : 0.0;

  std::set<FillClass> classes;
  for (std::size_t s : ss) classes.insert(model.shapes->at(static_cast<int>(s)).fill_class);
  sp.components.shape_type_mix = static_cast<double>(classes.size()) / 3.0;

  sp.score = weighted(sp.components, model.config.weights);
  sp.palette = std::move(p);
  return sp;
}

ScoredPalette score_palette(const Palette& p, const Model& model) {
  if (p.encoding == Encoding::Redundant) return score_redundant(p.entries, model);
  validate_palette(p, model.colors->size(), model.shapes->size());
  const Axis axis = p.encoding == Encoding::ColorOnly ? Axis::Color : Axis::Shape;
  std::vector<std::size_t> ids;
  for (const auto& m : p.entries) {
    ids.push_back(static_cast<std::size_t>(axis == Axis::Color ? *m.color : *m.shape));
  }
  std::sort(ids.begin(), ids.end());
  ScoredPalette sp;
  std::vector<int> as_int(ids.begin(), ids.end());
  sp.palette = single_palette(axis, as_int);
  sp.score = pair_mean(model, axis, p.n(), ids);
  if (axis == Axis::Color) sp.components.color_pair_mean = sp.score;
  else sp.components.shape_pair_mean = sp.score;
  return sp;
}

std::vector<ScoredPalette> generate_redundant(std::size_t n,
                                              const Constraints& constraints,
                                              std::size_t k_out,
                                              std::uint64_t seed,
                                              const Model& model) {
  if (k_out < 1) {
    throw Error(ErrorCode::InvalidArgument, "k must be at least 1", "k");
  }
  const OptimizerConfig& cfg = model.config;
  const std::size_t nc = model.colors->size();
  const std::size_t ns = model.shapes->size();
  constraints.validate(Encoding::Redundant, n, nc, ns);

  std::set<int> pinned_c, pinned_s;
  for (const auto& m : constraints.required_markers) {
    pinned_c.insert(*m.color);
    pinned_s.insert(*m.shape);
  }

  auto top_sets = [&](Axis axis) {
    Constraints c;
    c.required_colors = constraints.required_colors;
    c.required_shapes = constraints.required_shapes;
    c.excluded_colors = constraints.excluded_colors;
    c.excluded_shapes = constraints.excluded_shapes;
    c.candidate_colors = constraints.candidate_colors;
    c.candidate_shapes = constraints.candidate_shapes;
    if (axis == Axis::Color) {
      c.required_shapes.clear();
      c.excluded_shapes.clear();
      c.candidate_shapes.reset();
      c.required_colors.insert(pinned_c.begin(), pinned_c.end());
    } else {
      c.required_colors.clear();
      c.excluded_colors.clear();
      c.candidate_colors.reset();
      c.required_shapes.insert(pinned_s.begin(), pinned_s.end());
    }
    const PairScores scores(*model.evidence, axis, n, cfg.min_obs);
    std::vector<std::vector<int>> sets;
    for (const auto& sp :
         generate_single_channel(n, axis, scores, c, cfg.top_sets,
                                 seed + (axis == Axis::Color ? 0 : 0x9e3779b9ull),
                                 cfg)) {
      std::vector<int> ids;
      for (const auto& m : sp.palette.entries) {
        ids.push_back(axis == Axis::Color ? *m.color : *m.shape);
      }
      sets.push_back(std::move(ids));
    }
    return sets;
  };
  const auto color_sets = top_sets(Axis::Color);
  const auto shape_sets = top_sets(Axis::Shape);

  const std::size_t free_n = n - constraints.required_markers.size();
  const auto perms = diverse_permutations(free_n, cfg.permutations).perms;

  struct Candidate {
    std::vector<Marker> markers;
    std::string key;
    double stage1;
  };
  std::vector<Candidate> candidates;
  std::set<std::string> seen;
  const ScoringWeights& w = cfg.weights;
  const double wm = w.marker_pair_mean + w.marker_individual_mean;
  for (const auto& cset : color_sets) {
    std::vector<int> free_c;
    for (int c : cset) {
      if (!pinned_c.count(c)) free_c.push_back(c);
    }
    for (const auto& sset : shape_sets) {
      std::vector<int> free_s;
      for (int s : sset) {
        if (!pinned_s.count(s)) free_s.push_back(s);
      }
      for (const auto& perm : perms) {
        std::vector<Marker> a = constraints.required_markers;
        for (std::size_t i = 0; i < free_n; ++i) {
          a.push_back({free_c[i], free_s[static_cast<std::size_t>(perm[i])]});
        }
        a = sorted_markers(a);
        Palette p{Encoding::Redundant, a};
        std::string key = canonical_key(p);
        if (!seen.insert(key).second) continue;
        double stage1 = 0.0;
        try {
          const MarkerLevel ml = marker_level(a, model);
          stage1 = wm > 0.0 ? (w.marker_pair_mean * ml.pair_mean +
                               w.marker_individual_mean * ml.individual_mean) /
                                  wm
                            : 0.0;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::MissingEvidence) throw;
          continue;
        }
        candidates.push_back({std::move(a), std::move(key), stage1});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& x, const Candidate& y) {
              return better(x.stage1, x.key, y.stage1, y.key);
            });
  if (candidates.size() > cfg.shortlist) candidates.resize(cfg.shortlist);

  std::vector<ScoredPalette> out;
  for (const auto& c : candidates) {
    try {
      out.push_back(score_redundant(c.markers, model));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MissingEvidence) throw;
    }
  }
  if (out.empty()) {
    throw Error(ErrorCode::MissingEvidence,
                "no redundant candidate of size " + std::to_string(n) +
                    " has complete evidence",
                "marker_matrix");
  }
  sort_and_rank(out);
  if (out.size() > k_out) out.resize(k_out);
  return out;
}

std::vector<ScoredPalette> generate(Encoding encoding, std::size_t n,
                                    const Constraints& constraints,
                                    std::size_t k_out, std::uint64_t seed,
                                    const Model& model) {
  model.config.validate();
  check_n(n);
  if (encoding == Encoding::Redundant) {
    return generate_redundant(n, constraints, k_out, seed, model);
  }
  const Axis axis = encoding == Encoding::ColorOnly ? Axis::Color : Axis::Shape;
  constraints.validate(encoding, n, model.colors->size(), model.shapes->size());
  const PairScores scores(*model.evidence, axis, n, model.config.min_obs);
  return generate_single_channel(n, axis, scores, constraints, k_out, seed,
                                 model.config);
}

ScoredPalette swap_element(const ScoredPalette& scored, std::size_t position,
                           SwapChannel channel, Constraints& constraints,
                           const Model& model) {
  const Palette& p = scored.palette;
  if (position >= p.n()) {
    throw Error(ErrorCode::InvalidArgument,
                "position " + std::to_string(position) + " is outside the palette",
                "position");
  }
  if ((p.encoding == Encoding::ColorOnly && channel != SwapChannel::Color) ||
      (p.encoding == Encoding::ShapeOnly && channel != SwapChannel::Shape)) {
    throw Error(ErrorCode::InvalidArgument,
                "channel does not exist in a " +
                    std::string(encoding_name(p.encoding)) + " palette",
                "channel");
  }
  const Marker target = p.entries[position];
  for (const auto& pin : constraints.required_markers) {
    if (pin == target) {
      throw Error(ErrorCode::Constraint,
                  "marker " + format_marker(target) + " is pinned", "position");
    }
  }
  const bool color = channel == SwapChannel::Color;
  const int rejected = color ? *target.color : *target.shape;
  const auto& required = color ? constraints.required_colors
                               : constraints.required_shapes;
  bool pinned_element = false;
  for (const auto& pin : constraints.required_markers) {
    if (color ? pin.color == rejected : pin.shape == rejected) pinned_element = true;
  }
  if (required.count(rejected) || pinned_element) {
    throw Error(ErrorCode::Constraint,
                std::string(color ? "colour " : "shape ") +
                    std::to_string(rejected) + " is required",
                "position");
  }
  if (color) constraints.excluded_colors.insert(rejected);
  else constraints.excluded_shapes.insert(rejected);

  std::set<int> in_use;
  for (const auto& m : p.entries) {
    const auto id = color ? m.color : m.shape;
    if (id) in_use.insert(*id);
  }
  const std::vector<int> allowed =
      color ? constraints.allowed_colors(model.colors->size())
            : constraints.allowed_shapes(model.shapes->size());
  std::optional<ScoredPalette> best;
  for (int alt : allowed) {
    if (in_use.count(alt)) continue;
    Palette q = p;
    if (color) q.entries[position].color = alt;
    else q.entries[position].shape = alt;
    try {
      ScoredPalette sp = score_palette(q, model);
      sp.palette = std::move(q);  // keep the caller's entry order
      if (!best || sp.score > best->score) best = std::move(sp);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MissingEvidence) throw;
    }
  }
  if (!best) {
    throw Error(ErrorCode::Exhausted,
                std::string("no remaining ") + (color ? "colour" : "shape") +
                    " can replace " + std::to_string(rejected) +
                    " (excluded: " +
                    join_ids(color ? constraints.excluded_colors
                                   : constraints.excluded_shapes) +
                    ")",
                "position");
  }
  best->rank = scored.rank;
  return *best;
}

LabColor jitter_color(LabColor lab, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dl(-5.0, 5.0);
  std::uniform_real_distribution<double> dab(-10.0, 10.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double a = dl(rng);
    const double b = dab(rng);
    const double c = dab(rng);
    const LabColor out{lab.L + a, lab.a + b, lab.b + c};
    if (!lab_to_srgb(out).in_gamut) continue;
    if (ciede2000(lab, out) > 15.0) continue;
    return out;
  }
  return lab;
}

ColorId nearest_representative(LabColor lab, const ColorPool& pool) {
  if (pool.size() == 0) {
    throw Error(ErrorCode::InvalidArgument, "colour pool is empty", "pool");
  }
  ColorId best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& e : pool.entries()) {
    const double d = ciede2000(lab, e.lab);
    if (d < best_d) {
      best_d = d;
      best = e.id;
    }
  }
  return best;
}

}  // namespace catpaw
