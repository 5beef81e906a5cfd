#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "uicq/colorspace.hpp"
#include "uicq/error.hpp"

using namespace uicq;

namespace {

ImageTensor halves(const Rgb& left, const Rgb& right, int h = 8, int w = 8) {
  ImageTensor img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Rgb& c = x < w / 2 ? left : right;
      img.set_pixel(y, x, c.r, c.g, c.b);
    }
  return img;
}

}  // namespace

TEST_CASE("rgb_to_hsv examples") {
  const Hsv red = rgb_to_hsv(1, 0, 0);
  CHECK(red.h == 0.0);
  CHECK(red.s == 1.0);
  CHECK(red.v == 1.0);

  const Hsv green = rgb_to_hsv(0, 1, 0);
  CHECK(green.h == 120.0);
  CHECK(green.s == 1.0);
  CHECK(green.v == 1.0);

  const Hsv gray = rgb_to_hsv(0.5, 0.5, 0.5);
  CHECK(gray.h == 0.0);
  CHECK(gray.s == 0.0);
  CHECK(gray.v == 0.5);

  const Hsv black = rgb_to_hsv(0, 0, 0);
  CHECK(black.h == 0.0);
  CHECK(black.s == 0.0);
  CHECK(black.v == 0.0);

  CHECK(rgb_to_hsv(0, 0, 1).h == 240.0);
  CHECK(rgb_to_hsv(1, 0, 1).h == 300.0);
  CHECK(rgb_to_hsv(0, 1, 1).h == 180.0);
}

TEST_CASE("rgb_to_hsv agrees with the sector oracle on random colors") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 5000; ++i) {
    const double r = u(rng), g = u(rng), b = u(rng);
    const Hsv got = rgb_to_hsv(r, g, b);
    const auto want = oracle::hsv(r, g, b);
    CHECK(got.h == doctest::Approx(static_cast<double>(want.h)).epsilon(1e-12));
    CHECK(got.s == doctest::Approx(static_cast<double>(want.s)).epsilon(1e-12));
    CHECK(got.v == static_cast<double>(want.v));
    CHECK(got.h >= 0.0);
    CHECK(got.h < 360.0);
  }
}

TEST_CASE("hsv_to_rgb inverts rgb_to_hsv") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double r = u(rng), g = u(rng), b = u(rng);
    const Rgb back = hsv_to_rgb(rgb_to_hsv(r, g, b));
    CHECK(back.r == doctest::Approx(r).epsilon(1e-12));
    CHECK(back.g == doctest::Approx(g).epsilon(1e-12));
    CHECK(back.b == doctest::Approx(b).epsilon(1e-12));
  }
  const Rgb wrapped = hsv_to_rgb({480.0, 1.0, 1.0});
  CHECK(wrapped.r == doctest::Approx(0.0));
  CHECK(wrapped.g == doctest::Approx(1.0));
}

TEST_CASE("hue_bin edges") {
  CHECK(hue_bin(0.0, 36) == 0);
  CHECK(hue_bin(9.999, 36) == 0);
  CHECK(hue_bin(10.0, 36) == 1);
  CHECK(hue_bin(180.0, 36) == 18);
  CHECK(hue_bin(359.999, 36) == 35);
  CHECK(hue_bin(360.0, 36) == 35);
}

TEST_CASE("hue_histogram examples") {
  SUBCASE("solid red") {
    const HueHistogram h = hue_histogram(ImageTensor(4, 4, 1, 0, 0), 36);
    REQUIRE(h.bins() == 36);
    CHECK(h.probs[0] == 1.0);
    for (int i = 1; i < 36; ++i) CHECK(h.probs[static_cast<std::size_t>(i)] == 0.0);
    CHECK(h.chromatic_fraction == 1.0);
  }
  SUBCASE("half red, half cyan") {
    const ImageTensor img = halves({1, 0, 0}, {0, 1, 1});
    const HueHistogram h = hue_histogram(img, 36);
    const oracle::Histogram want = oracle::histogram(img, 36, kDefaultSatMin, kDefaultValMin);
    for (int i = 0; i < 36; ++i) {
      const double expected =
          want.counts.count(i) ? static_cast<double>(want.counts.at(i)) / static_cast<double>(want.chromatic) : 0.0;
      CHECK(h.probs[static_cast<std::size_t>(i)] == expected);
    }
    CHECK(h.probs[0] == 0.5);
    CHECK(h.probs[18] == 0.5);
  }
  SUBCASE("solid gray") {
    const HueHistogram h = hue_histogram(ImageTensor(4, 4, 0.5, 0.5, 0.5), 36);
    for (double p : h.probs) CHECK(p == 0.0);
    CHECK(h.chromatic_fraction == 0.0);
    CHECK(h.chromatic_count == 0);
  }
  SUBCASE("gates apply independently") {
    // Dark saturated pixel fails the value gate; bright pale pixel fails the saturation gate.
    const HueHistogram h = hue_histogram(halves({0.05, 0, 0}, {1, 0.95, 0.95}), 36);
    CHECK(h.chromatic_fraction == 0.0);
  }
  SUBCASE("fewer than two bins") {
    CHECK_THROWS_AS(hue_histogram(ImageTensor(2, 2), 1), Error);
  }
}

TEST_CASE("rotating channels shifts the histogram by a third") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n : {3, 12, 36, 90}) {
    // Hues on bin centres keep the +120 degree shift away from bin edges.
    ImageTensor img(6, 6);
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x) {
        const int bin = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
        const Rgb c = hsv_to_rgb({(bin + 0.5) * 360.0 / n, 0.2 + 0.8 * u(rng), 0.2 + 0.8 * u(rng)});
        img.set_pixel(y, x, c.r, c.g, c.b);
      }
    ImageTensor rotated(6, 6);
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x) rotated.set_pixel(y, x, img.at(y, x, 2), img.at(y, x, 0), img.at(y, x, 1));

    const HueHistogram a = hue_histogram(img, n);
    const HueHistogram b = hue_histogram(rotated, n);
    for (int i = 0; i < n; ++i) {
      CHECK(b.probs[static_cast<std::size_t>((i + n / 3) % n)] ==
            doctest::Approx(a.probs[static_cast<std::size_t>(i)]).epsilon(1e-12));
    }
  }
}

TEST_CASE("to_hsv planes match per-pixel conversion") {
  ImageTensor img(2, 3);
  img.set_pixel(1, 2, 0.2, 0.4, 0.8);
  const HsvImage hsv = to_hsv(img);
  REQUIRE(hsv.hue.size() == 6);
  const Hsv p = rgb_to_hsv(0.2, 0.4, 0.8);
  CHECK(hsv.hue[5] == p.h);
  CHECK(hsv.saturation[5] == p.s);
  CHECK(hsv.value[5] == p.v);
}
