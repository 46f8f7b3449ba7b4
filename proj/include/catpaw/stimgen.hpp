#pragma once

// Correlation-task scatterplots: point generation, overlap jitter, SVG
// rendering and the experiment plans built from them.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "catpaw/catalog.hpp"
#include "catpaw/optimizer.hpp"

namespace catpaw {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Sample Pearson correlation of the points. Throws UndefinedCorrelation for
/// fewer than two points or zero variance on either axis.
double sample_correlation(std::span<const Point> pts);

struct StimulusSpec {
  int n = 2;
  int points_per_category = 20;
  double target_r_min = 0.8;
  double target_r_max = 0.95;
  double runner_up_gap = 0.2;
  double tolerance = 0.02;
  double plot_px = 400.0;
  double margin_px = 20.0;
  double mark_px = 6.0;
  int ticks_per_axis = 13;
  std::uint64_t seed = 1;

  void validate() const;
};

/// What one category looks like on screen.
struct MarkStyle {
  std::string hex;
  ShapeId shape = 0;
};

/// Colour-only palettes draw filled circles; shape-only palettes draw black.
inline constexpr std::string_view kShapeOnlyHex = "#000000";
std::vector<MarkStyle> mark_styles(const Palette& p, const ColorPool& colors,
                                   const ShapeCatalog& shapes);

/// Affine data -> pixel map shared by both axes (y grows downwards).
struct PixelMap {
  double x0 = 0.0;
  double y0 = 0.0;
  double scale = 1.0;
  double origin_px = 20.0;
  double extent_px = 380.0;

  Point to_px(Point p) const;
  Point to_data(Point px) const;
};

struct StimulusData {
  StimulusSpec spec;
  std::vector<MarkStyle> styles;
  std::vector<std::vector<Point>> points;  // data units, after jitter
  std::vector<double> r;                   // sample correlation per category
  int target_index = 0;
  PixelMap map;

  std::vector<Point> pixels(std::size_t category) const;
};

/// Bivariate standard normal draw with correlation `r_target`, redrawn until
/// the sample correlation lies within `tolerance`. Throws GenerationFailure
/// after 1000 draws.
std::vector<Point> gen_correlated_points(double r_target, std::size_t count,
                                         std::uint64_t seed,
                                         double tolerance = 0.02);

/// One target category with r in the target range, every other category
/// drawn uniformly from [-0.2, r_target_sample - gap]. Points are mapped to
/// pixels, overlapping marks are nudged apart (at most 2 px per step along
/// a fixed spiral, in point order) and the correlations re-verified; a
/// failed verification regenerates from the next child seed.
StimulusData gen_stimulus(const StimulusSpec& spec,
                          std::span<const MarkStyle> styles);

/// Two or three categories whose top two correlations differ by at least
/// 0.4 (less tolerance).
StimulusData gen_engagement_check(const StimulusSpec& spec,
                                  std::span<const MarkStyle> styles);

/// Checks the stimulus invariants from scratch; returns the first violation.
std::optional<std::string> verify_stimulus(const StimulusData& s,
                                           double min_gap);

/// SVG 1.1: white background, black axes with ticks, one element with
/// class="mark" per point.
std::string render_svg(const StimulusData& s, const ShapeCatalog& shapes);

enum class Experiment { E1, E2, E3, E4 };
std::string_view experiment_name(Experiment e);
Experiment parse_experiment(std::string_view s);

struct DesignEntry {
  std::optional<std::string> hex;  // absent for shape-only designs
  std::optional<ColorId> color;    // pool id when the colour is a pool colour
  std::optional<ShapeId> shape;

  friend bool operator==(const DesignEntry&, const DesignEntry&) = default;
};

struct Design {
  std::size_t index = 0;
  Encoding encoding = Encoding::ColorOnly;
  int n = 0;
  std::string color_source;  // empty when unused
  std::string shape_source;
  int set_index = 0;         // position within its (source, n) block
  std::vector<DesignEntry> entries;
  std::uint64_t seed = 0;    // stimulus seed
  int group = 0;
};

struct EngagementCheck {
  int group = 0;
  int n = 2;
  std::uint64_t seed = 0;
};

struct ExperimentPlan {
  Experiment experiment = Experiment::E1;
  std::uint64_t seed = 0;
  std::vector<Design> designs;
  std::vector<std::vector<std::size_t>> groups;  // design indices per group
  std::vector<EngagementCheck> engagement;
};

/// Inputs the plans draw from. E1 and E2 use the four study colour palettes
/// from the designer file; E3 and E4 use the pools.
struct PlanSources {
  const ColorPool* colors = nullptr;
  const ShapeCatalog* shapes = nullptr;
  const std::vector<NamedPalette>* designer = nullptr;
};

inline constexpr std::string_view kStudyColorPalettes[] = {
    "paired", "tableau10", "stata_s2", "carto_pastel"};

/// E1: 3 encodings x 20 sets x 9 counts = 540 in 10 groups of 54.
/// E2: 24 palette combinations x 10 = 240 in 5 groups of 48.
/// E3: 90 colour sets x 9 counts = 810 in 15 groups of 54.
/// E4: (2 + 6 + 7 x 13) x 9 = 891 in 15 groups of 59 or 60.
ExperimentPlan build_plan(Experiment e, std::uint64_t seed,
                          const PlanSources& sources);

/// Mark styles for a design; shape-only designs use kShapeOnlyHex and
/// colour-only designs the filled circle.
std::vector<MarkStyle> design_styles(const Design& d,
                                     const ShapeCatalog& shapes);

/// Tab-separated manifest, one line per design.
std::string format_plan(const ExperimentPlan& plan);

}  // namespace catpaw
