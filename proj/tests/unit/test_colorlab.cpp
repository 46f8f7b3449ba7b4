#include <cmath>
#include <cstdint>

#include "catpaw/colorlab.hpp"
#include "catpaw/error.hpp"
#include "doctest.h"
#include "../support/gen.hpp"
#include "../support/sharma.hpp"

using namespace catpaw;

namespace {

// Second sRGB -> Lab routine written from the CIE epsilon/kappa form with the
// published D65 white, used as a cross-check for the library conversion.
LabColor oracle_lab(int r8, int g8, int b8) {
  auto lin = [](int v) {
    const double c = v / 255.0;
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
  };
  const double r = lin(r8), g = lin(g8), b = lin(b8);
  const double X = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double Y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double Z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  const double eps = 216.0 / 24389.0;
  const double kappa = 24389.0 / 27.0;
  auto f = [&](double t) {
    return t > eps ? std::pow(t, 1.0 / 3.0) : (kappa * t + 16.0) / 116.0;
  };
  const double fx = f(X / 0.95047), fy = f(Y / 1.0), fz = f(Z / 1.08883);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

}  // namespace

TEST_CASE("srgb_to_lab white and black") {
  const LabColor w = srgb_to_lab({255, 255, 255});
  CHECK(w.L == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(std::abs(w.a) < 0.01);
  CHECK(std::abs(w.b) < 0.01);
  const LabColor k = srgb_to_lab({0, 0, 0});
  CHECK(k.L == 0.0);
  CHECK(std::abs(k.a) < 1e-12);
  CHECK(std::abs(k.b) < 1e-12);
}

TEST_CASE("srgb_to_lab mid gray matches the frozen reference") {
  // Value produced by scikit-image rgb2lab on (128,128,128)/255 before the
  // build; it uses the same D65 white.
  const LabColor g = srgb_to_lab({128, 128, 128});
  CHECK(g.L == doctest::Approx(53.585014).epsilon(1e-7));
  CHECK(std::abs(g.a) < 1e-3);
  CHECK(std::abs(g.b) < 1e-3);
  const LabColor o = oracle_lab(128, 128, 128);
  CHECK(std::abs(g.L - o.L) < 1e-4);
}

TEST_CASE("srgb_to_lab agrees with the oracle routine on random colours") {
  testgen::Gen gen(11);
  for (int i = 0; i < 2000; ++i) {
    const RgbColor c = gen.rgb();
    const LabColor x = srgb_to_lab(c);
    const LabColor y = oracle_lab(c.r, c.g, c.b);
    REQUIRE(std::abs(x.L - y.L) < 1e-4);
    REQUIRE(std::abs(x.a - y.a) < 1e-3);
    REQUIRE(std::abs(x.b - y.b) < 1e-3);
  }
}

TEST_CASE("lab_to_srgb white and an out-of-gamut point") {
  const GamutResult w = lab_to_srgb({100.0, 0.0, 0.0});
  CHECK(w.in_gamut);
  CHECK(w.rgb == RgbColor{255, 255, 255});

  const LabColor far{50.0, 120.0, -120.0};
  const GamutResult r = lab_to_srgb(far);
  CHECK_FALSE(r.in_gamut);
  // Brute force: no sRGB colour on a 3-step lattice comes within 10 units.
  double best = 1e9;
  for (int R = 0; R <= 255; R += 3)
    for (int G = 0; G <= 255; G += 3)
      for (int B = 0; B <= 255; B += 3) {
        const LabColor o = oracle_lab(R, G, B);
        const double d = std::hypot(o.L - far.L, o.a - far.a, o.b - far.b);
        if (d < best) best = d;
      }
  CHECK(best > 10.0);
}

TEST_CASE("round trip over the 8-step sRGB lattice") {
  for (int r = 0; r <= 256; r += 8)
    for (int g = 0; g <= 256; g += 8)
      for (int b = 0; b <= 256; b += 8) {
        const RgbColor c{static_cast<std::uint8_t>(std::min(r, 255)),
                         static_cast<std::uint8_t>(std::min(g, 255)),
                         static_cast<std::uint8_t>(std::min(b, 255))};
        const GamutResult back = lab_to_srgb(srgb_to_lab(c));
        REQUIRE(back.in_gamut);
        REQUIRE(std::abs(back.rgb.r - c.r) <= 1);
        REQUIRE(std::abs(back.rgb.g - c.g) <= 1);
        REQUIRE(std::abs(back.rgb.b - c.b) <= 1);
      }
}

TEST_CASE("lab_to_srgb clamps out-of-gamut channels") {
  const GamutResult r = lab_to_srgb({0.0, 100.0, 100.0});
  CHECK_FALSE(r.in_gamut);
  const GamutResult k = lab_to_srgb({0.0, 0.0, 0.0});
  CHECK(k.in_gamut);
  CHECK(k.rgb == RgbColor{0, 0, 0});
}

TEST_CASE("lab_to_lch") {
  const LchColor z = lab_to_lch({40.0, 0.0, 0.0});
  CHECK(z.C == 0.0);
  CHECK(z.h == 0.0);
  CHECK(lab_to_lch({40.0, 3.0, 4.0}).C == doctest::Approx(5.0));
  CHECK(lab_to_lch({40.0, -1.0, 0.0}).h == doctest::Approx(180.0));
  CHECK(lab_to_lch({40.0, 0.0, -1.0}).h == doctest::Approx(270.0));
  testgen::Gen gen(3);
  for (int i = 0; i < 1000; ++i) {
    const LchColor c = lab_to_lch(gen.lab());
    REQUIRE(c.C >= 0.0);
    REQUIRE(c.h >= 0.0);
    REQUIRE(c.h < 360.0);
  }
}

TEST_CASE("ciede2000 reproduces the published verification pairs") {
  for (const auto& tc : testref::kSharma) {
    CAPTURE(tc.expected);
    CHECK(std::abs(ciede2000(tc.x, tc.y) - tc.expected) <= 1e-4);
    CHECK(std::abs(ciede2000(tc.y, tc.x) - tc.expected) <= 1e-4);
  }
}

TEST_CASE("ciede2000 sanity on random samples") {
  testgen::Gen gen(5);
  for (int i = 0; i < 1000; ++i) {
    const LabColor x = gen.lab();
    const LabColor y = gen.lab();
    const double d = ciede2000(x, y);
    REQUIRE(d >= 0.0);
    REQUIRE(d == doctest::Approx(ciede2000(y, x)).epsilon(1e-12));
    REQUIRE(ciede2000(x, x) == 0.0);
    if (!(x == y)) REQUIRE(d > 0.0);
  }
}

TEST_CASE("jnd thresholds follow the configured profile") {
  const JndParams p;
  const double s = 6.0 / p.pixels_per_degree;
  const JndThresholds t = jnd_thresholds(6.0, p);
  CHECK(t.L == doctest::Approx(p.p * (p.L.intercept + p.L.slope / s)));
  CHECK(t.a == doctest::Approx(p.p * (p.a.intercept + p.a.slope / s)));
  CHECK(t.b == doctest::Approx(p.p * (p.b.intercept + p.b.slope / s)));
  CHECK(t.L > 0.0);
}

TEST_CASE("jnd_discriminable basic cases") {
  const JndParams p;
  const LabColor c{50.0, 10.0, -10.0};
  CHECK_FALSE(jnd_discriminable(c, c, 6.0, p));
  CHECK(jnd_discriminable({0.0, 0.0, 0.0}, {100.0, 0.0, 0.0}, 6.0, p));
  CHECK_THROWS_AS(jnd_discriminable(c, c, 0.0, p), Error);
  CHECK_THROWS_AS(jnd_discriminable(c, c, -1.0, p), Error);
}

TEST_CASE("jnd boundary is exclusive on every axis") {
  const JndParams p;
  const JndThresholds t = jnd_thresholds(6.0, p);
  const LabColor o{0.0, 0.0, 0.0};
  CHECK_FALSE(jnd_discriminable(o, {t.L, 0.0, 0.0}, 6.0, p));
  CHECK_FALSE(jnd_discriminable(o, {0.0, t.a, 0.0}, 6.0, p));
  CHECK_FALSE(jnd_discriminable(o, {0.0, 0.0, t.b}, 6.0, p));
  CHECK(jnd_discriminable(o, {std::nextafter(t.L, 1e9), 0.0, 0.0}, 6.0, p));
  CHECK(jnd_discriminable(o, {0.0, std::nextafter(t.a, 1e9), 0.0}, 6.0, p));
  CHECK(jnd_discriminable(o, {0.0, 0.0, std::nextafter(t.b, 1e9)}, 6.0, p));
  CHECK_FALSE(jnd_discriminable(o, {t.L, t.a, t.b}, 6.0, p));
}

TEST_CASE("jnd monotone in differences and anti-monotone in size") {
  const JndParams p;
  testgen::Gen gen(17);
  for (int i = 0; i < 5000; ++i) {
    const LabColor x = gen.lab();
    const LabColor d{gen.uniform(-40, 40), gen.uniform(-40, 40),
                     gen.uniform(-40, 40)};
    const LabColor y{x.L + d.L, x.a + d.a, x.b + d.b};
    const double grow = gen.uniform(1.0, 2.0);
    const LabColor z{x.L + d.L * grow, x.a + d.a * grow, x.b + d.b * grow};
    const double px = gen.uniform(1.0, 40.0);
    if (jnd_discriminable(x, y, px, p)) REQUIRE(jnd_discriminable(x, z, px, p));
    const double smaller = px * gen.uniform(0.1, 1.0);
    if (!jnd_discriminable(x, y, px, p)) {
      REQUIRE_FALSE(jnd_discriminable(x, y, smaller, p));
    }
  }
}

TEST_CASE("JndParams validation") {
  JndParams p;
  CHECK_NOTHROW(p.validate());
  p.L.slope = -1.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = JndParams{};
  p.p = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p.p = 1.5;
  CHECK_THROWS_AS(p.validate(), Error);
  p = JndParams{};
  p.b.intercept = std::nan("");
  CHECK_THROWS_AS(p.validate(), Error);
  p = JndParams{};
  p.pixels_per_degree = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("hex parsing and formatting") {
  CHECK(parse_hex("#FF8000") == RgbColor{255, 128, 0});
  CHECK(parse_hex("ff8000") == RgbColor{255, 128, 0});
  CHECK(format_hex({255, 128, 0}) == "#ff8000");
  CHECK_THROWS_AS(parse_hex("#ff80"), Error);
  CHECK_THROWS_AS(parse_hex("#gg8000"), Error);
  testgen::Gen gen(2);
  for (int i = 0; i < 200; ++i) {
    const RgbColor c = gen.rgb();
    REQUIRE(parse_hex(format_hex(c)) == c);
  }
}
