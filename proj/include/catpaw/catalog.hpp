#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "catpaw/colorlab.hpp"

namespace catpaw {

using ColorId = int;
using ShapeId = int;

enum class FillClass { Filled, Unfilled, Open };

std::string_view fill_class_name(FillClass f);
FillClass parse_fill_class(std::string_view s);

struct ColorEntry {
  ColorId id = 0;
  LabColor lab;
  std::string hex;
  std::string display_name;
  bool manual = false;
};

struct ShapeEntry {
  ShapeId id = 0;
  std::string name;
  FillClass fill_class = FillClass::Filled;
  std::string path;  // SVG path data in the unit box [0,1]x[0,1]
  std::string source_tool;
};

/// Ordered set of representative colours. Ids are dense 0..n-1 and equal to
/// the entry's position.
class ColorPool {
 public:
  ColorPool() = default;
  explicit ColorPool(std::vector<ColorEntry> entries);

  std::size_t size() const { return entries_.size(); }
  bool contains(ColorId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < entries_.size();
  }
  const ColorEntry& at(ColorId id) const;
  const std::vector<ColorEntry>& entries() const { return entries_; }

 private:
  std::vector<ColorEntry> entries_;
};

class ShapeCatalog {
 public:
  ShapeCatalog() = default;
  explicit ShapeCatalog(std::vector<ShapeEntry> entries);

  std::size_t size() const { return entries_.size(); }
  bool contains(ShapeId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < entries_.size();
  }
  const ShapeEntry& at(ShapeId id) const;
  const std::vector<ShapeEntry>& entries() const { return entries_; }
  std::optional<ShapeId> find(std::string_view name) const;

 private:
  std::vector<ShapeEntry> entries_;
};

struct GridSpec {
  double L_min = 25.0, L_max = 100.0, L_step = 5.0;
  double a_min = -128.0, a_max = 127.0, a_step = 2.0;
  double b_min = -128.0, b_max = 127.0, b_step = 2.0;

  void validate() const;
};

/// In-gamut lattice points, L-major then a then b.
std::vector<LabColor> grid_sample_lab(const GridSpec& spec);

struct KMeansResult {
  std::vector<LabColor> centroids;          // snapped to cluster members
  std::vector<std::size_t> labels;          // cluster per sample
  std::vector<double> inertia_history;      // one entry per Lloyd iteration
  int iterations = 0;
};

/// Lloyd's k-means in Lab with k-means++ seeding. Stops after 200 iterations
/// or when the relative inertia change drops below 1e-6; each centroid is
/// then snapped to the nearest sample of its own cluster (ties: lowest index).
KMeansResult kmeans_lab_detailed(std::span<const LabColor> samples,
                                 std::size_t k, std::uint64_t seed);
std::vector<LabColor> kmeans_lab(std::span<const LabColor> samples,
                                 std::size_t k, std::uint64_t seed);

/// Greedy maximal clique in the JND-discriminability graph: repeatedly drop
/// the colour with the fewest discriminable partners among those remaining
/// (ties: lowest index) until every pair is discriminable, then re-admit
/// dropped colours in index order wherever they stay discriminable from all
/// members. Output preserves input order.
std::vector<LabColor> max_jnd_subset(std::span<const LabColor> colors,
                                     double mark_size_px,
                                     const JndParams& params);

struct PoolDerivation {
  std::size_t grid_size = 0;
  std::vector<LabColor> centroids;
  std::vector<LabColor> subset;  // ordered by hue, then lightness
};

/// grid_sample_lab -> kmeans_lab(k, seed) -> max_jnd_subset. The bundled
/// pool was produced with k = 200 and seed 32.
PoolDerivation derive_pool(const GridSpec& spec, std::size_t k,
                           std::uint64_t seed, double mark_size_px,
                           const JndParams& params);

inline constexpr std::uint64_t kPoolSeed = 32;
inline constexpr std::size_t kPoolCentroids = 200;

/// Oranges added by hand after the derivation; the clustering leaves the
/// orange hue range empty.
inline constexpr LabColor kManualPoolColors[] = {{60.0, 18.0, 46.0},
                                                 {75.0, 32.0, 26.0}};

/// Pool entries for `subset` followed by `manual`, ids in that order.
ColorPool assemble_pool(std::span<const LabColor> subset,
                        std::span<const LabColor> manual);

/// Coarse descriptive name from lightness, chroma and hue ("dark blue").
std::string describe_color(LabColor lab);

/// Entry with hex and display name filled in from `lab`.
ColorEntry make_color_entry(ColorId id, LabColor lab, bool manual);

/// Structural checks shared by the loader and the validate tooling.
/// `expected_size` is enforced only when set.
void validate_color_pool(const ColorPool& pool, double mark_size_px,
                         const JndParams& params,
                         std::optional<std::size_t> expected_size);
void validate_shape_catalog(const ShapeCatalog& catalog,
                            std::optional<std::size_t> expected_size);

inline constexpr std::size_t kDefaultPoolSize = 39;
inline constexpr double kDefaultMarkPx = 6.0;
inline constexpr double kMinPoolLightness = 25.0;

ColorPool parse_color_pool(std::string_view text);
ShapeCatalog parse_shape_catalog(std::string_view text);
std::string format_color_pool(const ColorPool& pool);
std::string format_shape_catalog(const ShapeCatalog& catalog);

struct PoolPaths {
  std::filesystem::path colors;
  std::filesystem::path shapes;
};

struct Pools {
  ColorPool colors;
  ShapeCatalog shapes;
};

/// Loads and validates both pool files. With `expected_size` left at its
/// default the 39-entry invariant of the bundled pools is enforced.
Pools load_default_pools(const PoolPaths& paths, const JndParams& params,
                         std::optional<std::size_t> expected_size =
                             kDefaultPoolSize);

std::string read_text_file(const std::filesystem::path& path);

/// A palette taken from an existing tool: colours as hex or shapes by
/// catalog id, in the tool's order.
struct NamedPalette {
  std::string name;
  std::string tool;
  std::vector<std::string> colors;  // "#rrggbb"; empty for shape palettes
  std::vector<ShapeId> shapes;      // empty for colour palettes
  bool is_color() const { return !colors.empty(); }
};

/// Parses a "# catpaw-designer 1" file. Shape names resolve through
/// `catalog`; unknown names raise UnknownId.
std::vector<NamedPalette> parse_designer_palettes(std::string_view text,
                                                  const ShapeCatalog& catalog);
const NamedPalette& find_palette(const std::vector<NamedPalette>& palettes,
                                 std::string_view name);

}  // namespace catpaw
