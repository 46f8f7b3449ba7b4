#include "catpaw/evidence.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "catpaw/error.hpp"
#include "text_table.hpp"

namespace catpaw {

namespace {

const std::vector<std::string> kTrialColumns = {
    "trial_id", "group_id",       "category_count", "markers",
    "target_index", "response_index", "correct"};

std::string at_line(std::size_t line) {
  return line ? "line " + std::to_string(line) + ": " : std::string();
}

Marker parse_marker(std::string_view s, std::size_t line) {
  Marker m;
  for (auto part : detail::split(s, '/')) {
    part = detail::trim(part);
    if (part.size() < 2 || (part[0] != 'c' && part[0] != 's')) {
      throw Error(ErrorCode::Parse,
                  at_line(line) + "malformed marker '" +
                      std::string(s) + "'",
                  "markers");
    }
    const int id = detail::parse_int(part.substr(1), line, "markers");
    auto& slot = part[0] == 'c' ? m.color : m.shape;
    if (slot) {
      throw Error(ErrorCode::Parse,
                  at_line(line) + "marker '" +
                      std::string(s) + "' repeats a channel",
                  "markers");
    }
    slot = id;
  }
  return m;
}

bool in_selector(int category_count, BinSelector sel) {
  if (sel == BinSelector::All) return true;
  return to_selector(bin_of(category_count)) == sel;
}

std::string fmt6(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::vector<Marker> parse_marker_list(std::string_view text) {
  std::vector<Marker> out;
  for (auto tok : detail::split(text, ',')) {
    tok = detail::trim(tok);
    if (!tok.empty()) out.push_back(parse_marker(tok, 0));
  }
  return out;
}

std::string_view axis_name(Axis a) {
  switch (a) {
    case Axis::Color: return "color";
    case Axis::Shape: return "shape";
    case Axis::Marker: return "marker";
  }
  return "color";
}

Axis parse_axis(std::string_view s) {
  if (s == "color") return Axis::Color;
  if (s == "shape") return Axis::Shape;
  if (s == "marker") return Axis::Marker;
  throw Error(ErrorCode::InvalidArgument, "unknown axis '" + std::string(s) + "'",
              "axis");
}

std::string_view bin_name(BinSelector b) {
  switch (b) {
    case BinSelector::Small: return "Small";
    case BinSelector::Medium: return "Medium";
    case BinSelector::Large: return "Large";
    case BinSelector::All: return "All";
  }
  return "All";
}

BinSelector parse_bin(std::string_view s) {
  std::string lower(s);
  for (auto& ch : lower) ch = static_cast<char>(std::tolower(ch));
  if (lower == "small") return BinSelector::Small;
  if (lower == "medium") return BinSelector::Medium;
  if (lower == "large") return BinSelector::Large;
  if (lower == "all") return BinSelector::All;
  throw Error(ErrorCode::InvalidArgument, "unknown bin '" + std::string(s) + "'",
              "bin");
}

CategoryBin bin_of(int n) {
  if (n < kMinCategories || n > kMaxCategories) {
    throw Error(ErrorCode::InvalidArgument,
                "category count must lie in [2, 10], got " + std::to_string(n),
                "n");
  }
  if (n <= 4) return CategoryBin::Small;
  if (n <= 7) return CategoryBin::Medium;
  return CategoryBin::Large;
}

std::string format_marker(const Marker& m) {
  std::string out;
  if (m.color) out += "c" + std::to_string(*m.color);
  if (m.shape) {
    if (!out.empty()) out += "/";
    out += "s" + std::to_string(*m.shape);
  }
  return out;
}

void validate_trial(const TrialRecord& t, std::size_t n_colors,
                    std::size_t n_shapes) {
  auto fail = [&](ErrorCode code, const std::string& msg,
                  const std::string& field) {
    throw Error(code, "trial " + t.trial_id + ": " + msg, field);
  };
  if (t.category_count < kMinCategories || t.category_count > kMaxCategories) {
    fail(ErrorCode::Validation,
         "category_count " + std::to_string(t.category_count) +
             " outside [2, 10]",
         "category_count");
  }
  if (static_cast<int>(t.categories.size()) != t.category_count) {
    fail(ErrorCode::Validation,
         "expected " + std::to_string(t.category_count) + " markers, got " +
             std::to_string(t.categories.size()),
         "markers");
  }
  if (t.target_index < 0 || t.target_index >= t.category_count) {
    fail(ErrorCode::Validation, "target_index out of range", "target_index");
  }
  if (t.response_index &&
      (*t.response_index < 0 || *t.response_index >= t.category_count)) {
    fail(ErrorCode::Validation, "response_index out of range",
         "response_index");
  }
  const bool should_be_correct =
      t.response_index && *t.response_index == t.target_index;
  if (t.correct != should_be_correct) {
    fail(ErrorCode::Validation,
         "correct flag disagrees with target/response", "correct");
  }
  const bool has_color = t.categories.front().color.has_value();
  const bool has_shape = t.categories.front().shape.has_value();
  std::set<int> colors, shapes;
  for (const auto& m : t.categories) {
    if (!m.color && !m.shape) {
      fail(ErrorCode::Validation, "marker without colour or shape", "markers");
    }
    if (m.color.has_value() != has_color || m.shape.has_value() != has_shape) {
      fail(ErrorCode::Validation, "markers mix channel presence", "markers");
    }
    if (m.color) {
      if (*m.color < 0 || static_cast<std::size_t>(*m.color) >= n_colors) {
        fail(ErrorCode::UnknownId, "unknown color_id " + std::to_string(*m.color),
             "color_id=" + std::to_string(*m.color));
      }
      if (!colors.insert(*m.color).second) {
        fail(ErrorCode::Validation,
             "color_id " + std::to_string(*m.color) + " repeats", "markers");
      }
    }
    if (m.shape) {
      if (*m.shape < 0 || static_cast<std::size_t>(*m.shape) >= n_shapes) {
        fail(ErrorCode::UnknownId, "unknown shape_id " + std::to_string(*m.shape),
             "shape_id=" + std::to_string(*m.shape));
      }
      if (!shapes.insert(*m.shape).second) {
        fail(ErrorCode::Validation,
             "shape_id " + std::to_string(*m.shape) + " repeats", "markers");
      }
    }
  }
}

IngestResult parse_trials(std::string_view text, std::size_t n_colors,
                          std::size_t n_shapes) {
  IngestResult out;
  if (detail::trim(text).empty()) return out;
  const auto table =
      detail::parse_table(text, "catpaw-trials", 1, kTrialColumns);
  for (const auto& col : table.unknown_columns) {
    out.warnings.push_back("ignoring unknown column '" + col + "'");
  }
  std::vector<std::string> problems;
  ErrorCode first_code = ErrorCode::Validation;
  std::string first_field;
  for (const auto& row : table.rows) {
    try {
      TrialRecord t;
      t.trial_id = std::string(row.fields[0]);
      t.group_id = std::string(row.fields[1]);
      t.category_count =
          detail::parse_int(row.fields[2], row.line, "category_count");
      for (auto m : detail::split(row.fields[3], ',')) {
        t.categories.push_back(parse_marker(m, row.line));
      }
      t.target_index = detail::parse_int(row.fields[4], row.line, "target_index");
      if (row.fields[5] == "timeout") {
        t.response_index.reset();
      } else {
        t.response_index =
            detail::parse_int(row.fields[5], row.line, "response_index");
      }
      const int correct = detail::parse_int(row.fields[6], row.line, "correct");
      if (correct != 0 && correct != 1) {
        throw Error(ErrorCode::Parse, "correct must be 0 or 1", "correct");
      }
      t.correct = correct == 1;
      validate_trial(t, n_colors, n_shapes);
      out.records.push_back(std::move(t));
    } catch (const Error& e) {
      if (problems.empty()) {
        first_code = e.code();
        first_field = e.field();
      }
      std::string msg = e.what();
      const std::string prefix = "line " + std::to_string(row.line);
      if (msg.rfind(prefix, 0) != 0) msg = prefix + ": " + msg;
      problems.push_back(std::move(msg));
    }
  }
  if (!problems.empty()) {
    std::string msg = std::to_string(problems.size()) + " invalid trial line(s)";
    for (std::size_t i = 0; i < problems.size() && i < 20; ++i) {
      msg += "\n  " + problems[i];
    }
    if (problems.size() > 20) msg += "\n  ...";
    throw Error(first_code, msg,
                first_field.empty() ? "line" : first_field);
  }
  return out;
}

IngestResult ingest_trials(const std::filesystem::path& path,
                           std::size_t n_colors, std::size_t n_shapes) {
  return parse_trials(read_text_file(path), n_colors, n_shapes);
}

std::string format_trials(std::span<const TrialRecord> trials) {
  std::string out = "# catpaw-trials 1\n";
  for (std::size_t i = 0; i < kTrialColumns.size(); ++i) {
    if (i) out += '\t';
    out += kTrialColumns[i];
  }
  out += '\n';
  for (const auto& t : trials) {
    out += t.trial_id + '\t' + t.group_id + '\t' +
           std::to_string(t.category_count) + '\t';
    for (std::size_t i = 0; i < t.categories.size(); ++i) {
      if (i) out += ',';
      out += format_marker(t.categories[i]);
    }
    out += '\t' + std::to_string(t.target_index) + '\t' +
           (t.response_index ? std::to_string(*t.response_index)
                             : std::string("timeout")) +
           '\t' + (t.correct ? "1" : "0") + '\n';
  }
  return out;
}

PairMatrix::PairMatrix(Axis axis, BinSelector bin, std::size_t n)
    : axis_(axis), bin_(bin), n_(n) {
  const std::size_t cells = n < 2 ? 0 : n * (n - 1) / 2;
  correct_.assign(cells, 0);
  trials_.assign(cells, 0);
}

std::size_t PairMatrix::index(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  // Row-major strict upper triangle.
  return i * (2 * n_ - i - 1) / 2 + (j - i - 1);
}

std::optional<double> PairMatrix::acc(std::size_t i, std::size_t j) const {
  if (i == j || i >= n_ || j >= n_) return std::nullopt;
  const std::size_t k = index(i, j);
  if (trials_[k] == 0) return std::nullopt;
  return static_cast<double>(correct_[k]) / trials_[k];
}

std::uint32_t PairMatrix::trials(std::size_t i, std::size_t j) const {
  if (i == j || i >= n_ || j >= n_) return 0;
  return trials_[index(i, j)];
}

std::uint32_t PairMatrix::correct(std::size_t i, std::size_t j) const {
  if (i == j || i >= n_ || j >= n_) return 0;
  return correct_[index(i, j)];
}

void PairMatrix::add(std::size_t i, std::size_t j, bool correct) {
  if (i == j) return;
  const std::size_t k = index(i, j);
  ++trials_[k];
  if (correct) ++correct_[k];
}

void PairMatrix::set_counts(std::size_t i, std::size_t j, std::uint32_t correct,
                            std::uint32_t trials) {
  if (i == j || i >= n_ || j >= n_ || correct > trials) {
    throw Error(ErrorCode::InvalidArgument, "invalid matrix cell counts", "cell");
  }
  const std::size_t k = index(i, j);
  correct_[k] = correct;
  trials_[k] = trials;
}

std::vector<MatrixCell> PairMatrix::present_cells() const {
  std::vector<MatrixCell> out;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) {
      const std::size_t k = index(i, j);
      if (trials_[k] > 0) out.push_back({i, j, correct_[k], trials_[k]});
    }
  }
  return out;
}

std::size_t PairMatrix::present_count() const {
  return static_cast<std::size_t>(
      std::count_if(trials_.begin(), trials_.end(),
                    [](std::uint32_t t) { return t > 0; }));
}

PairMatrix PairMatrix::merge(const PairMatrix& x, const PairMatrix& y) {
  if (x.axis_ != y.axis_ || x.n_ != y.n_) {
    throw Error(ErrorCode::InvalidArgument,
                "cannot merge matrices of different axis or size", "matrix");
  }
  PairMatrix out(x.axis_, x.bin_ == y.bin_ ? x.bin_ : BinSelector::All, x.n_);
  for (std::size_t k = 0; k < out.trials_.size(); ++k) {
    out.trials_[k] = x.trials_[k] + y.trials_[k];
    out.correct_[k] = x.correct_[k] + y.correct_[k];
  }
  return out;
}

std::optional<double> MarkerAccuracyTable::acc(std::size_t marker) const {
  if (marker >= trials.size() || trials[marker] == 0) return std::nullopt;
  return static_cast<double>(correct[marker]) / trials[marker];
}

namespace {

// Id of trial category `m` on `axis`, if the marker carries that axis.
std::optional<std::size_t> axis_id(const Marker& m, Axis axis,
                                   std::size_t n_shapes) {
  switch (axis) {
    case Axis::Color:
      if (m.color) return static_cast<std::size_t>(*m.color);
      return std::nullopt;
    case Axis::Shape:
      if (m.shape) return static_cast<std::size_t>(*m.shape);
      return std::nullopt;
    case Axis::Marker:
      if (m.color && m.shape) return marker_index(*m.color, *m.shape, n_shapes);
      return std::nullopt;
  }
  return std::nullopt;
}

std::size_t axis_size(Axis axis, std::size_t n_colors, std::size_t n_shapes) {
  switch (axis) {
    case Axis::Color: return n_colors;
    case Axis::Shape: return n_shapes;
    case Axis::Marker: return n_colors * n_shapes;
  }
  return 0;
}

void accumulate(PairMatrix& m, const TrialRecord& t, std::size_t n_shapes) {
  std::vector<std::size_t> ids;
  ids.reserve(t.categories.size());
  for (const auto& mk : t.categories) {
    if (auto id = axis_id(mk, m.axis(), n_shapes)) ids.push_back(*id);
  }
  for (std::size_t x = 0; x < ids.size(); ++x) {
    for (std::size_t y = x + 1; y < ids.size(); ++y) {
      m.add(ids[x], ids[y], t.correct);
    }
  }
}

void accumulate(MarkerAccuracyTable& table, const TrialRecord& t) {
  for (const auto& mk : t.categories) {
    if (!mk.color || !mk.shape) continue;
    const std::size_t k = marker_index(*mk.color, *mk.shape, table.n_shapes);
    ++table.trials[k];
    if (t.correct) ++table.correct[k];
  }
}

MarkerAccuracyTable empty_marker_table(BinSelector bin, std::size_t n_colors,
                                       std::size_t n_shapes) {
  MarkerAccuracyTable t;
  t.bin = bin;
  t.n_colors = n_colors;
  t.n_shapes = n_shapes;
  t.correct.assign(n_colors * n_shapes, 0);
  t.trials.assign(n_colors * n_shapes, 0);
  return t;
}

}  // namespace

PairMatrix pairwise_accuracy(std::span<const TrialRecord> trials, Axis axis,
                             BinSelector bin, std::size_t n_colors,
                             std::size_t n_shapes) {
  PairMatrix m(axis, bin, axis_size(axis, n_colors, n_shapes));
  for (const auto& t : trials) {
    if (in_selector(t.category_count, bin)) accumulate(m, t, n_shapes);
  }
  return m;
}

MarkerAccuracyTable marker_accuracy(std::span<const TrialRecord> trials,
                                    BinSelector bin, std::size_t n_colors,
                                    std::size_t n_shapes) {
  auto table = empty_marker_table(bin, n_colors, n_shapes);
  for (const auto& t : trials) {
    if (in_selector(t.category_count, bin)) accumulate(table, t);
  }
  return table;
}

SummaryStats summary_stats(const PairMatrix& m) {
  const auto cells = m.present_cells();
  if (cells.empty()) {
    throw Error(ErrorCode::EmptyMatrix, "matrix has no observed cells",
                "matrix");
  }
  SummaryStats s;
  s.cells = cells.size();
  s.min = cells.front().acc();
  s.max = s.min;
  double sum = 0.0;
  for (const auto& c : cells) {
    const double v = c.acc();
    sum += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.mean = sum / static_cast<double>(cells.size());
  double ss = 0.0;
  for (const auto& c : cells) ss += (c.acc() - s.mean) * (c.acc() - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(cells.size()));
  return s;
}

EvidenceSet empty_evidence(std::size_t n_colors, std::size_t n_shapes) {
  EvidenceSet ev;
  ev.n_colors = n_colors;
  ev.n_shapes = n_shapes;
  for (Axis a : {Axis::Color, Axis::Shape, Axis::Marker}) {
    for (int b = 0; b < 4; ++b) {
      ev.matrix(a, static_cast<BinSelector>(b)) =
          PairMatrix(a, static_cast<BinSelector>(b),
                     axis_size(a, n_colors, n_shapes));
    }
  }
  for (int b = 0; b < 4; ++b) {
    ev.markers[b] =
        empty_marker_table(static_cast<BinSelector>(b), n_colors, n_shapes);
  }
  return ev;
}

EvidenceSet build_evidence(std::span<const TrialRecord> trials,
                           std::size_t n_colors, std::size_t n_shapes) {
  EvidenceSet ev = empty_evidence(n_colors, n_shapes);
  for (const auto& t : trials) {
    const BinSelector own = to_selector(bin_of(t.category_count));
    for (BinSelector b : {own, BinSelector::All}) {
      for (Axis a : {Axis::Color, Axis::Shape, Axis::Marker}) {
        accumulate(ev.matrix(a, b), t, n_shapes);
      }
      accumulate(ev.marker_table(b), t);
    }
  }
  return ev;
}

std::string format_matrix_table(const PairMatrix& m) {
  std::string out = std::string(axis_name(m.axis())) + "/" +
                    std::string(bin_name(m.bin()));
  for (std::size_t j = 0; j < m.n(); ++j) out += "\t" + std::to_string(j);
  out += "\n";
  for (std::size_t i = 0; i < m.n(); ++i) {
    out += std::to_string(i);
    for (std::size_t j = 0; j < m.n(); ++j) {
      out += "\t";
      if (i == j) {
        out += "-";
      } else if (auto v = m.acc(i, j)) {
        out += fmt6(*v);
      }
    }
    out += "\n";
  }
  return out;
}

}  // namespace catpaw
