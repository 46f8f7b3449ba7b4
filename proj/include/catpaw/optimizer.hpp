#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "catpaw/catalog.hpp"
#include "catpaw/evidence.hpp"

namespace catpaw {

enum class Encoding { ColorOnly, ShapeOnly, Redundant };
std::string_view encoding_name(Encoding e);  // "color", "shape", "redundant"
Encoding parse_encoding(std::string_view s);

struct Palette {
  Encoding encoding = Encoding::ColorOnly;
  std::vector<Marker> entries;

  std::size_t n() const { return entries.size(); }
  friend bool operator==(const Palette&, const Palette&) = default;
};

/// Checks entry presence per encoding, distinctness and id ranges.
void validate_palette(const Palette& p, std::size_t n_colors,
                      std::size_t n_shapes);

/// Order-independent identity of a palette, e.g. "redundant:c1/s4,c7/s0".
std::string canonical_key(const Palette& p);

struct ScoreComponents {
  std::optional<double> marker_pair_mean;
  std::optional<double> marker_individual_mean;
  std::optional<double> color_pair_mean;
  std::optional<double> shape_pair_mean;
  std::optional<double> lightness_variance;
  std::optional<double> shape_type_mix;
};

struct ScoredPalette {
  Palette palette;
  double score = 0.0;
  ScoreComponents components;
  int rank = 0;
};

struct ScoringWeights {
  double marker_pair_mean = 0.35;
  double marker_individual_mean = 0.20;
  double color_pair_mean = 0.15;
  double shape_pair_mean = 0.15;
  double lightness_variance = 0.075;
  double shape_type_mix = 0.075;

  /// Throws InvalidArgument unless every weight is finite and >= 0 and the
  /// sum is 1 within 1e-9.
  void validate() const;
};

struct Constraints {
  std::set<ColorId> required_colors;
  std::set<ShapeId> required_shapes;
  std::vector<Marker> required_markers;  // both ids set; pinned pairings
  std::set<ColorId> excluded_colors;
  std::set<ShapeId> excluded_shapes;
  std::optional<std::vector<ColorId>> candidate_colors;  // default: full pool
  std::optional<std::vector<ShapeId>> candidate_shapes;

  /// Throws UnknownId for ids outside the pools and Constraint for
  /// infeasible combinations (too many required elements, required and
  /// excluded overlap, required ids outside the candidate pool, channel
  /// requirements the encoding cannot carry, too few candidates).
  void validate(Encoding encoding, std::size_t n, std::size_t n_colors,
                std::size_t n_shapes) const;

  /// Allowed ids after candidate pool and exclusions.
  std::vector<ColorId> allowed_colors(std::size_t n_colors) const;
  std::vector<ShapeId> allowed_shapes(std::size_t n_shapes) const;

  bool admits(const Palette& p) const;
};

struct OptimizerConfig {
  ScoringWeights weights;
  std::size_t min_obs = 5;
  std::size_t shortlist = 50;
  int repetitions = 10;
  std::uint64_t enumeration_cutoff = 500000;
  std::size_t beam_width = 2048;
  std::size_t top_sets = 10;
  std::size_t permutations = 13;

  void validate() const;
};

/// Dense accuracy lookup for one axis at one category count: the cell of the
/// count's bin when it has at least `min_obs` trials, otherwise the All-bin
/// cell under the same rule, otherwise missing (NaN).
class PairScores {
 public:
  PairScores() = default;
  PairScores(const EvidenceSet& ev, Axis axis, std::size_t category_count,
             std::size_t min_obs);
  static PairScores from_matrix(const PairMatrix& m, std::size_t min_obs);

  std::size_t n() const { return n_; }
  double at(std::size_t i, std::size_t j) const { return v_[i * n_ + j]; }
  bool has(std::size_t i, std::size_t j) const;
  void set(std::size_t i, std::size_t j, double v);

 private:
  std::size_t n_ = 0;
  std::vector<double> v_;
};

/// Mean of the C(k, 2) cells over `ids`, cells below `min_obs` trials counted
/// as missing. Throws MissingEvidence naming the first missing pair.
double score_subset(std::span<const int> ids, const PairMatrix& m,
                    std::size_t min_obs = 1);
double score_subset(std::span<const int> ids, const PairScores& s);

/// Everything the scorers read: pools, evidence and tuning.
struct Model {
  const ColorPool* colors = nullptr;
  const ShapeCatalog* shapes = nullptr;
  const EvidenceSet* evidence = nullptr;
  OptimizerConfig config;

  std::optional<double> pair(Axis axis, std::size_t category_count,
                             std::size_t i, std::size_t j) const;
  std::optional<double> marker(std::size_t category_count, ColorId c,
                               ShapeId s) const;
};

/// Single-channel palettes ranked by mean pairwise accuracy. Ten
/// repetitions each sample half of the allowed pool (required ids always
/// kept), enumerate every n-subset of the sample (beam search past the
/// enumeration cutoff) and keep their best k_out; the union is deduplicated
/// and ranked by (score desc, canonical key).
std::vector<ScoredPalette> generate_single_channel(
    std::size_t n, Axis axis, const PairScores& scores,
    const Constraints& constraints, std::size_t k_out, std::uint64_t seed,
    const OptimizerConfig& config = {});

struct DiversePermutations {
  std::vector<std::vector<int>> perms;  // perms[k][i]: shape slot for colour i
  bool truncated = false;               // m exceeded n!
};

/// Fraction of positions on which two assignments agree; equals the cosine
/// similarity of their flattened permutation matrices.
double permutation_cosine(std::span<const int> x, std::span<const int> y);

/// Starts from the identity and greedily adds the permutation whose largest
/// similarity to those already chosen is smallest (ties: lexicographically
/// first). Returns all n! permutations when m >= n!.
DiversePermutations diverse_permutations(std::size_t n, std::size_t m);

/// Pairs colors[i] with shapes[perm[i]] for each diverse permutation.
std::vector<std::vector<Marker>> diverse_assignments(
    std::span<const ColorId> colors, std::span<const ShapeId> shapes,
    std::size_t m);

/// Scores a palette at its own category count. Redundant palettes get all
/// six components; single-channel palettes only their axis pair mean.
/// Throws MissingEvidence when a required cell is unusable.
ScoredPalette score_palette(const Palette& p, const Model& model);
ScoredPalette score_redundant(std::span<const Marker> assignment,
                              const Model& model);

/// Redundant palettes: top colour subsets x top shape subsets x diverse
/// permutations of their free slots, pinned markers held fixed. Candidates
/// are shortlisted on the marker-level components and ranked on the full
/// weighted score. Candidates lacking evidence are skipped; if none remain
/// the call throws MissingEvidence.
std::vector<ScoredPalette> generate_redundant(std::size_t n,
                                              const Constraints& constraints,
                                              std::size_t k_out,
                                              std::uint64_t seed,
                                              const Model& model);

/// Dispatches on encoding and assigns dense ranks.
std::vector<ScoredPalette> generate(Encoding encoding, std::size_t n,
                                    const Constraints& constraints,
                                    std::size_t k_out, std::uint64_t seed,
                                    const Model& model);

enum class SwapChannel { Color, Shape };

/// Replaces one element of `scored` with the best allowed alternative while
/// holding every other entry fixed. The rejected element is appended to the
/// exclusions in `constraints` first. Required or pinned elements raise a
/// Constraint error; no scoreable alternative raises Exhausted. Entry order
/// is preserved, so the replacement stays at `position`.
ScoredPalette swap_element(const ScoredPalette& scored, std::size_t position,
                           SwapChannel channel, Constraints& constraints,
                           const Model& model);

/// Uniform proposal within +-5 L and +-10 a/b, accepted when in gamut and
/// within CIEDE2000 15 of the input. Returns the input after 1000 misses.
LabColor jitter_color(LabColor lab, std::uint64_t seed);

/// Pool id with the smallest CIEDE2000 distance (ties: lowest id).
ColorId nearest_representative(LabColor lab, const ColorPool& pool);

}  // namespace catpaw
