#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace catpaw {

// 8-bit sRGB, D65 white point.
struct RgbColor {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const RgbColor&, const RgbColor&) = default;
};

// CIELAB under D65 / 2 degree observer.
struct LabColor {
  double L = 0.0;
  double a = 0.0;
  double b = 0.0;

  friend bool operator==(const LabColor&, const LabColor&) = default;
};

struct LchColor {
  double L = 0.0;
  double C = 0.0;
  double h = 0.0;  // degrees, [0, 360)
};

struct GamutResult {
  RgbColor rgb;
  bool in_gamut = false;
};

/// Noticeable-difference thresholds as a function of mark size.
///
/// Each axis threshold is `p * (intercept + slope / s)` where `s` is the mark
/// size in degrees of visual angle, obtained from pixels through
/// `pixels_per_degree`. A pair is discriminable when at least one of
/// |dL|, |da|, |db| strictly exceeds its threshold.
struct JndAxis {
  double slope = 0.0;
  double intercept = 0.0;
};

struct JndParams {
  std::string profile = "stone2014";
  JndAxis L{1.50, 10.16};
  JndAxis a{3.08, 10.68};
  JndAxis b{5.74, 10.70};
  double p = 0.5;
  double pixels_per_degree = 60.0;

  /// Throws Error(InvalidArgument) if any coefficient is non-finite, a slope
  /// is negative (thresholds must not grow with size), an intercept is not
  /// positive, p lies outside (0, 1], or pixels_per_degree is not positive.
  void validate() const;
};

struct JndThresholds {
  double L = 0.0;
  double a = 0.0;
  double b = 0.0;
};

LabColor srgb_to_lab(RgbColor c);
GamutResult lab_to_srgb(LabColor c);
LchColor lab_to_lch(LabColor c);

/// CIEDE2000 colour difference with kL = kC = kH = 1.
double ciede2000(LabColor c1, LabColor c2);

JndThresholds jnd_thresholds(double mark_size_px, const JndParams& params);
bool jnd_discriminable(LabColor c1, LabColor c2, double mark_size_px,
                       const JndParams& params);

/// Parses "#RRGGBB" (or "RRGGBB"), case-insensitive.
RgbColor parse_hex(std::string_view text);
/// Lowercase "#rrggbb".
std::string format_hex(RgbColor c);

}  // namespace catpaw
