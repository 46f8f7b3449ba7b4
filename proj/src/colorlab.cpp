#include "catpaw/colorlab.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "catpaw/error.hpp"

namespace catpaw {

namespace {

// IEC 61966-2-1 linear sRGB -> XYZ. The white point is taken as the row sums
// so that (255, 255, 255) lands exactly on L = 100, a = b = 0.
constexpr double kRgbToXyz[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};

struct Mat3 {
  double m[3][3];
};

constexpr double kWhite[3] = {
    kRgbToXyz[0][0] + kRgbToXyz[0][1] + kRgbToXyz[0][2],
    kRgbToXyz[1][0] + kRgbToXyz[1][1] + kRgbToXyz[1][2],
    kRgbToXyz[2][0] + kRgbToXyz[2][1] + kRgbToXyz[2][2],
};

Mat3 invert(const double (&a)[3][3]) {
  const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                     a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                     a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  Mat3 r{};
  r.m[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) / det;
  r.m[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / det;
  r.m[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det;
  r.m[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) / det;
  r.m[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det;
  r.m[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / det;
  r.m[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) / det;
  r.m[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / det;
  r.m[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det;
  return r;
}

const Mat3& xyz_to_rgb() {
  static const Mat3 inv = invert(kRgbToXyz);
  return inv;
}

constexpr double kDelta = 6.0 / 29.0;

double lab_f(double t) {
  if (t > kDelta * kDelta * kDelta) return std::cbrt(t);
  return t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

double lab_f_inv(double t) {
  if (t > kDelta) return t * t * t;
  return 3.0 * kDelta * kDelta * (t - 4.0 / 29.0);
}

double decode(std::uint8_t v) {
  const double c = v / 255.0;
  if (c <= 0.04045) return c / 12.92;
  return std::pow((c + 0.055) / 1.055, 2.4);
}

double encode(double c) {
  if (c <= 0.0031308) return 12.92 * c;
  return 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

double deg(double rad) { return rad * 180.0 / std::numbers::pi; }
double rad(double deg) { return deg * std::numbers::pi / 180.0; }

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  const char lc = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lc >= 'a' && lc <= 'f') return lc - 'a' + 10;
  return -1;
}

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::InvalidArgument,
                std::string("JND coefficient is not finite: ") + name, name);
  }
}

}  // namespace

LabColor srgb_to_lab(RgbColor c) {
  const double lin[3] = {decode(c.r), decode(c.g), decode(c.b)};
  double xyz[3];
  for (int i = 0; i < 3; ++i) {
    xyz[i] = kRgbToXyz[i][0] * lin[0] + kRgbToXyz[i][1] * lin[1] +
             kRgbToXyz[i][2] * lin[2];
  }
  const double fx = lab_f(xyz[0] / kWhite[0]);
  const double fy = lab_f(xyz[1] / kWhite[1]);
  const double fz = lab_f(xyz[2] / kWhite[2]);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

GamutResult lab_to_srgb(LabColor c) {
  const double fy = (c.L + 16.0) / 116.0;
  const double fx = fy + c.a / 500.0;
  const double fz = fy - c.b / 200.0;
  const double xyz[3] = {kWhite[0] * lab_f_inv(fx), kWhite[1] * lab_f_inv(fy),
                         kWhite[2] * lab_f_inv(fz)};
  const auto& m = xyz_to_rgb().m;
  constexpr double kEps = 1e-9;
  GamutResult out;
  out.in_gamut = true;
  std::uint8_t channels[3];
  for (int i = 0; i < 3; ++i) {
    const double lin = m[i][0] * xyz[0] + m[i][1] * xyz[1] + m[i][2] * xyz[2];
    // Mirror the transfer curve for negative values so the flag reflects the
    // true distance outside the cube.
    const double v = (lin < 0.0 ? -encode(-lin) : encode(lin)) * 255.0;
    if (!(v >= -kEps && v <= 255.0 + kEps)) out.in_gamut = false;
    channels[i] =
        static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
  }
  out.rgb = {channels[0], channels[1], channels[2]};
  return out;
}

LchColor lab_to_lch(LabColor c) {
  const double chroma = std::hypot(c.a, c.b);
  double h = 0.0;
  if (chroma > 0.0) {
    h = deg(std::atan2(c.b, c.a));
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h -= 360.0;
  }
  return {c.L, chroma, h};
}

double ciede2000(LabColor c1, LabColor c2) {
  constexpr double kPow25_7 = 6103515625.0;  // 25^7

  const double c1ab = std::hypot(c1.a, c1.b);
  const double c2ab = std::hypot(c2.a, c2.b);
  const double cbar = 0.5 * (c1ab + c2ab);
  const double cbar7 = std::pow(cbar, 7.0);
  const double g = 0.5 * (1.0 - std::sqrt(cbar7 / (cbar7 + kPow25_7)));

  const double a1p = (1.0 + g) * c1.a;
  const double a2p = (1.0 + g) * c2.a;
  const double c1p = std::hypot(a1p, c1.b);
  const double c2p = std::hypot(a2p, c2.b);

  auto hue = [](double b, double ap) {
    if (b == 0.0 && ap == 0.0) return 0.0;
    double h = deg(std::atan2(b, ap));
    return h < 0.0 ? h + 360.0 : h;
  };
  const double h1p = hue(c1.b, a1p);
  const double h2p = hue(c2.b, a2p);

  const double dLp = c2.L - c1.L;
  const double dCp = c2p - c1p;

  double dhp = 0.0;
  const double cprod = c1p * c2p;
  if (cprod != 0.0) {
    dhp = h2p - h1p;
    if (dhp > 180.0) dhp -= 360.0;
    else if (dhp < -180.0) dhp += 360.0;
  }
  const double dHp = 2.0 * std::sqrt(cprod) * std::sin(rad(dhp) / 2.0);

  const double Lbar = 0.5 * (c1.L + c2.L);
  const double Cbar = 0.5 * (c1p + c2p);

  double hbar = h1p + h2p;
  if (cprod != 0.0) {
    if (std::abs(h1p - h2p) <= 180.0) {
      hbar *= 0.5;
    } else if (h1p + h2p < 360.0) {
      hbar = 0.5 * (hbar + 360.0);
    } else {
      hbar = 0.5 * (hbar - 360.0);
    }
  }

  const double t = 1.0 - 0.17 * std::cos(rad(hbar - 30.0)) +
                   0.24 * std::cos(rad(2.0 * hbar)) +
                   0.32 * std::cos(rad(3.0 * hbar + 6.0)) -
                   0.20 * std::cos(rad(4.0 * hbar - 63.0));
  const double dtheta = 30.0 * std::exp(-std::pow((hbar - 275.0) / 25.0, 2.0));
  const double Cbar7 = std::pow(Cbar, 7.0);
  const double rc = 2.0 * std::sqrt(Cbar7 / (Cbar7 + kPow25_7));
  const double lb50 = (Lbar - 50.0) * (Lbar - 50.0);
  const double sl = 1.0 + 0.015 * lb50 / std::sqrt(20.0 + lb50);
  const double sc = 1.0 + 0.045 * Cbar;
  const double sh = 1.0 + 0.015 * Cbar * t;
  const double rt = -std::sin(rad(2.0 * dtheta)) * rc;

  const double tl = dLp / sl;
  const double tc = dCp / sc;
  const double th = dHp / sh;
  return std::sqrt(tl * tl + tc * tc + th * th + rt * tc * th);
}

void JndParams::validate() const {
  for (const auto& [axis, name] :
       {std::pair{&L, "L"}, std::pair{&a, "a"}, std::pair{&b, "b"}}) {
    require_finite(axis->slope, name);
    require_finite(axis->intercept, name);
    if (axis->slope < 0.0) {
      throw Error(ErrorCode::InvalidArgument,
                  std::string("JND slope must be non-negative on axis ") + name,
                  name);
    }
    if (axis->intercept <= 0.0) {
      throw Error(ErrorCode::InvalidArgument,
                  std::string("JND intercept must be positive on axis ") + name,
                  name);
    }
  }
  require_finite(p, "p");
  if (!(p > 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "JND p must lie in (0, 1]", "p");
  }
  require_finite(pixels_per_degree, "pixels_per_degree");
  if (pixels_per_degree <= 0.0) {
    throw Error(ErrorCode::InvalidArgument,
                "pixels_per_degree must be positive", "pixels_per_degree");
  }
}

JndThresholds jnd_thresholds(double mark_size_px, const JndParams& params) {
  if (!(mark_size_px > 0.0) || !std::isfinite(mark_size_px)) {
    throw Error(ErrorCode::InvalidArgument, "mark size must be positive",
                "mark_size_px");
  }
  const double s = mark_size_px / params.pixels_per_degree;
  auto t = [&](const JndAxis& ax) {
    return params.p * (ax.intercept + ax.slope / s);
  };
  return {t(params.L), t(params.a), t(params.b)};
}

bool jnd_discriminable(LabColor c1, LabColor c2, double mark_size_px,
                       const JndParams& params) {
  const JndThresholds t = jnd_thresholds(mark_size_px, params);
  return std::abs(c1.L - c2.L) > t.L || std::abs(c1.a - c2.a) > t.a ||
         std::abs(c1.b - c2.b) > t.b;
}

RgbColor parse_hex(std::string_view text) {
  std::string_view s = text;
  if (!s.empty() && s.front() == '#') s.remove_prefix(1);
  if (s.size() != 6) {
    throw Error(ErrorCode::Parse,
                "malformed hex colour '" + std::string(text) + "'", "hex");
  }
  std::uint8_t ch[3];
  for (int i = 0; i < 3; ++i) {
    const int hi = hex_digit(s[2 * i]);
    const int lo = hex_digit(s[2 * i + 1]);
    if (hi < 0 || lo < 0) {
      throw Error(ErrorCode::Parse,
                  "malformed hex colour '" + std::string(text) + "'", "hex");
    }
    ch[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return {ch[0], ch[1], ch[2]};
}

std::string format_hex(RgbColor c) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out = "#";
  for (std::uint8_t v : {c.r, c.g, c.b}) {
    out.push_back(kDigits[v >> 4]);
    out.push_back(kDigits[v & 0xF]);
  }
  return out;
}

}  // namespace catpaw
