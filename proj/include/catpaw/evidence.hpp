#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "catpaw/catalog.hpp"

namespace catpaw {

enum class Axis { Color, Shape, Marker };
std::string_view axis_name(Axis a);
Axis parse_axis(std::string_view s);

enum class CategoryBin { Small, Medium, Large };

// Matrices are kept per bin plus one pooled over every category count.
enum class BinSelector { Small, Medium, Large, All };
std::string_view bin_name(BinSelector b);
BinSelector parse_bin(std::string_view s);
inline BinSelector to_selector(CategoryBin b) {
  return static_cast<BinSelector>(static_cast<int>(b));
}

inline constexpr int kMinCategories = 2;
inline constexpr int kMaxCategories = 10;

/// Small: 2-4, Medium: 5-7, Large: 8-10. Throws InvalidArgument outside [2, 10].
CategoryBin bin_of(int category_count);

struct Marker {
  std::optional<ColorId> color;
  std::optional<ShapeId> shape;

  friend bool operator==(const Marker&, const Marker&) = default;
  friend auto operator<=>(const Marker&, const Marker&) = default;
};

std::string format_marker(const Marker& m);  // "c3/s7", "c3", "s7"
/// Comma-separated markers in the format_marker form.
std::vector<Marker> parse_marker_list(std::string_view text);

struct TrialRecord {
  std::string trial_id;
  std::string group_id;
  int category_count = 0;
  std::vector<Marker> categories;
  int target_index = 0;
  std::optional<int> response_index;  // nullopt: timed out
  bool correct = false;
};

/// Checks the record invariants against pools of the given sizes. Throws
/// Validation / UnknownId errors.
void validate_trial(const TrialRecord& t, std::size_t n_colors,
                    std::size_t n_shapes);

struct IngestResult {
  std::vector<TrialRecord> records;
  std::vector<std::string> warnings;
};

/// Parses a "# catpaw-trials 1" log. An entirely blank input yields no
/// records. Every invalid line is collected; if any exist a single
/// Error(Validation/Parse/UnknownId) listing them (with line numbers) is
/// thrown. Unknown columns produce warnings.
IngestResult parse_trials(std::string_view text, std::size_t n_colors,
                          std::size_t n_shapes);
IngestResult ingest_trials(const std::filesystem::path& path,
                           std::size_t n_colors, std::size_t n_shapes);
std::string format_trials(std::span<const TrialRecord> trials);

struct MatrixCell {
  std::size_t i = 0;
  std::size_t j = 0;
  std::uint32_t correct = 0;
  std::uint32_t trials = 0;
  double acc() const { return static_cast<double>(correct) / trials; }
};

/// Symmetric pairwise accuracy over colours, shapes or markers. Counts are
/// stored on the strict upper triangle; the diagonal is always missing and a
/// cell's accuracy is present iff it has at least one observation.
class PairMatrix {
 public:
  PairMatrix() = default;
  PairMatrix(Axis axis, BinSelector bin, std::size_t n);

  Axis axis() const { return axis_; }
  BinSelector bin() const { return bin_; }
  std::size_t n() const { return n_; }

  std::optional<double> acc(std::size_t i, std::size_t j) const;
  std::uint32_t trials(std::size_t i, std::size_t j) const;
  std::uint32_t correct(std::size_t i, std::size_t j) const;

  void add(std::size_t i, std::size_t j, bool correct);
  void set_counts(std::size_t i, std::size_t j, std::uint32_t correct,
                  std::uint32_t trials);

  /// Cells with at least one observation, ordered by (i, j), i < j.
  std::vector<MatrixCell> present_cells() const;
  std::size_t present_count() const;

  /// Count-wise sum; equivalent to building from the concatenated logs.
  static PairMatrix merge(const PairMatrix& x, const PairMatrix& y);

  friend bool operator==(const PairMatrix&, const PairMatrix&) = default;

 private:
  std::size_t index(std::size_t i, std::size_t j) const;

  Axis axis_ = Axis::Color;
  BinSelector bin_ = BinSelector::All;
  std::size_t n_ = 0;
  std::vector<std::uint32_t> correct_;
  std::vector<std::uint32_t> trials_;
};

struct MarkerAccuracyTable {
  BinSelector bin = BinSelector::All;
  std::size_t n_colors = 0;
  std::size_t n_shapes = 0;
  std::vector<std::uint32_t> correct;  // indexed by marker_index
  std::vector<std::uint32_t> trials;

  std::optional<double> acc(std::size_t marker) const;
};

inline std::size_t marker_index(ColorId c, ShapeId s, std::size_t n_shapes) {
  return static_cast<std::size_t>(c) * n_shapes + static_cast<std::size_t>(s);
}

/// Each trial whose markers carry the axis contributes one observation to
/// every unordered pair of its distinct ids (C(k, 2) for k categories).
PairMatrix pairwise_accuracy(std::span<const TrialRecord> trials, Axis axis,
                             BinSelector bin, std::size_t n_colors,
                             std::size_t n_shapes);
MarkerAccuracyTable marker_accuracy(std::span<const TrialRecord> trials,
                                    BinSelector bin, std::size_t n_colors,
                                    std::size_t n_shapes);

struct SummaryStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double stddev = 0.0;  // population
  std::size_t cells = 0;
};

/// Descriptive statistics over present cells. Throws EmptyMatrix if none.
SummaryStats summary_stats(const PairMatrix& m);

/// Every pair and marker table for all axes and bins, built in one pass.
struct EvidenceSet {
  std::size_t n_colors = 0;
  std::size_t n_shapes = 0;
  std::array<std::array<PairMatrix, 4>, 3> pairs;  // [axis][bin selector]
  std::array<MarkerAccuracyTable, 4> markers;      // [bin selector]

  const PairMatrix& matrix(Axis a, BinSelector b) const {
    return pairs[static_cast<int>(a)][static_cast<int>(b)];
  }
  PairMatrix& matrix(Axis a, BinSelector b) {
    return pairs[static_cast<int>(a)][static_cast<int>(b)];
  }
  const MarkerAccuracyTable& marker_table(BinSelector b) const {
    return markers[static_cast<int>(b)];
  }
  MarkerAccuracyTable& marker_table(BinSelector b) {
    return markers[static_cast<int>(b)];
  }
};

EvidenceSet empty_evidence(std::size_t n_colors, std::size_t n_shapes);
EvidenceSet build_evidence(std::span<const TrialRecord> trials,
                           std::size_t n_colors, std::size_t n_shapes);

/// Rectangular tab-separated table: header row of ids, "-" on the diagonal,
/// empty for missing cells, accuracies with six decimals.
std::string format_matrix_table(const PairMatrix& m);

}  // namespace catpaw
