#pragma once

// Validation and reporting over palettes and trial logs.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "catpaw/evidence.hpp"
#include "catpaw/optimizer.hpp"

namespace catpaw {

struct ClusterResult {
  std::vector<int> labels;  // per item, numbered by first appearance
  int k = 0;
  std::vector<double> heights;                 // all n-1 merges, non-decreasing
  std::vector<std::pair<int, int>> merges;     // cluster ids, scipy-style
};

/// Agglomerative Ward clustering on Euclidean distance, cut at k clusters.
/// Ties go to the lowest (i, j) cluster pair. Throws InvalidArgument for
/// k outside [1, n] or ragged input.
ClusterResult ward_cluster(const std::vector<std::vector<double>>& items,
                           int k);

/// Pearson coefficient. Throws InvalidArgument for mismatched or short
/// inputs and UndefinedCorrelation when either side has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Percentile bootstrap interval for the mean (linear interpolation
/// between order statistics).
Interval bootstrap_mean_ci(std::span<const double> values, std::uint64_t seed,
                           int resamples = 1000, double level = 0.95);

using PaletteScorer = std::function<double(const Palette&)>;
PaletteScorer model_scorer(const Model& model);

/// The palette a trial displayed, with its encoding read off the markers.
Palette trial_palette(const TrialRecord& t);

struct RankValidationOptions {
  std::size_t samples_per_n = 50;
  int repeats = 3;
  std::uint64_t seed = 1;
  std::vector<int> category_counts;  // empty: every count present in trials
  /// Palettes to sample from. When empty, every palette shown in the trials
  /// is a candidate.
  std::vector<Palette> palettes;
  int resamples = 1000;
};

struct RankRow {
  int rank = 0;
  double mean_accuracy = 0.0;
  Interval ci;
  std::size_t samples = 0;
};

struct RankValidationReport {
  std::vector<RankRow> rows;
  double correlation = 0.0;  // rank vs mean accuracy
  std::size_t samples_per_n = 0;
  int repeats = 0;
  std::vector<int> category_counts;
};

/// For each repeat and category count, samples palettes, ranks them by
/// score (desc, canonical key asc) and looks up each palette's empirical
/// accuracy in the trials; accuracies are pooled per rank position.
/// Throws Coverage listing palettes without trials, or counts with too few
/// candidates.
RankValidationReport rank_validation(const PaletteScorer& scorer,
                                     std::span<const TrialRecord> trials,
                                     const RankValidationOptions& options);

struct PaletteGroup {
  std::string name;
  std::vector<Palette> palettes;
};

struct BaselineRow {
  std::string name;
  std::size_t count = 0;
  double mean = 0.0;
  Interval ci;
};

/// Mean model score and 95% bootstrap interval per group. Unscoreable
/// palettes propagate the scorer's error.
std::vector<BaselineRow> baseline_report(std::span<const PaletteGroup> groups,
                                         const PaletteScorer& scorer,
                                         std::uint64_t seed = 1);

std::string format_rank_report(const RankValidationReport& r);
std::string format_baseline_report(std::span<const BaselineRow> rows);

/// Rank vs mean accuracy line with its interval band.
std::string render_rank_plot(const RankValidationReport& r);

}  // namespace catpaw
