#pragma once

// Seeded synthetic ground truth for demos and tests. Accuracies come from a
// latent model: colour pairs improve with CIEDE2000 distance, shape pairs
// with distance in a hashed 2-D embedding plus a fill-class bonus, markers
// combine both, and larger category counts lower everything.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "catpaw/catalog.hpp"
#include "catpaw/evidence.hpp"

namespace catpaw {

class LatentModel {
 public:
  LatentModel(const ColorPool& colors, const ShapeCatalog& shapes,
              std::uint64_t seed);

  std::size_t n_colors() const { return nc_; }
  std::size_t n_shapes() const { return ns_; }

  double color_pair(std::size_t i, std::size_t j, CategoryBin bin) const;
  double shape_pair(std::size_t i, std::size_t j, CategoryBin bin) const;
  double marker_pair(ColorId c1, ShapeId s1, ColorId c2, ShapeId s2,
                     CategoryBin bin) const;
  double marker(ColorId c, ShapeId s, CategoryBin bin) const;

  /// Probability of a correct answer for a trial showing `categories`: the
  /// mean latent accuracy over its category pairs.
  double trial_accuracy(const std::vector<Marker>& categories) const;

 private:
  double noise(std::uint64_t a, std::uint64_t b, std::uint64_t c,
               double amplitude) const;

  std::uint64_t seed_;
  std::size_t nc_;
  std::size_t ns_;
  std::vector<double> color_base_;  // nc x nc, bin-free part
  std::vector<double> shape_base_;  // ns x ns
  std::vector<double> color_quality_;
  std::vector<double> shape_quality_;
};

/// Full-coverage evidence straight from the latent model: every cell of every
/// axis gets `trials_per_cell` observations in each size bin, correct counts
/// rounded from the latent accuracy, and the All bin holds the bin sums.
EvidenceSet synthetic_evidence(const ColorPool& colors,
                               const ShapeCatalog& shapes, std::uint64_t seed,
                               std::uint32_t trials_per_cell = 200);

struct SyntheticTrialSpec {
  std::uint64_t seed = 1;
  std::size_t trials = 1000;
  double timeout_rate = 0.02;
  std::size_t group_size = 60;
  bool color_only = true;
  bool shape_only = true;
  bool redundant = true;
};

/// Simulated trial log drawn from the latent model seeded with `spec.seed`.
std::vector<TrialRecord> synthetic_trials(const ColorPool& colors,
                                          const ShapeCatalog& shapes,
                                          const SyntheticTrialSpec& spec);

}  // namespace catpaw
