#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "uicq/error.hpp"
#include "uicq/metrics.hpp"

using namespace uicq;

namespace {

HueHistogram make_hist(std::vector<double> probs) {
  HueHistogram h;
  h.probs = std::move(probs);
  h.chromatic_count = 1;
  h.chromatic_fraction = 1.0;
  return h;
}

ImageTensor halves(const Rgb& left, const Rgb& right, int h = 64, int w = 64) {
  ImageTensor img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Rgb& c = x < w / 2 ? left : right;
      img.set_pixel(y, x, c.r, c.g, c.b);
    }
  return img;
}

}  // namespace

TEST_CASE("hue_entropy examples") {
  CHECK(hue_entropy(make_hist(std::vector<double>(36, 1.0 / 36.0))) == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<double> one(36, 0.0);
  one[7] = 1.0;
  CHECK(hue_entropy(make_hist(one)) == 0.0);

  std::vector<double> two(36, 0.0);
  two[0] = two[18] = 0.5;
  CHECK(hue_entropy(make_hist(two)) == doctest::Approx(std::log(2.0) / std::log(36.0)).epsilon(1e-14));
  CHECK(hue_entropy(make_hist(two)) == doctest::Approx(0.19343).epsilon(1e-4));

  HueHistogram empty;
  empty.probs.assign(36, 0.0);
  CHECK(hue_entropy(empty) == 0.0);
}

TEST_CASE("hue_entropy stays in [0,1] on random histograms") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + static_cast<int>(rng() % 60);
    std::vector<double> p(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (double& x : p) sum += (x = u(rng) < 0.3 ? 0.0 : u(rng));
    if (sum == 0.0) continue;
    long double e = 0.0L;
    for (double& x : p) {
      x /= sum;
      if (x > 0) e -= x * std::log(static_cast<long double>(x));
    }
    const double q = hue_entropy(make_hist(p));
    CHECK(q >= 0.0);
    CHECK(q <= 1.0);
    CHECK(q == doctest::Approx(static_cast<double>(e / std::log(static_cast<long double>(n)))).epsilon(1e-12));
  }
}

TEST_CASE("coefficient_of_variation examples") {
  const std::vector<double> constant(10, 0.4);
  CHECK(coefficient_of_variation(constant) == 0.0);
  const std::vector<double> zero_one = {0.0, 1.0};
  CHECK(raw_coefficient_of_variation(zero_one) == 1.0);
  CHECK(coefficient_of_variation(zero_one) == 0.5);
  const std::vector<double> zeros(5, 0.0);
  CHECK(coefficient_of_variation(zeros) == 0.0);

  CHECK_THROWS_AS(coefficient_of_variation(std::vector<double>{}), Error);
  const std::vector<double> negative = {0.5, -0.1};
  try {
    coefficient_of_variation(negative);
    FAIL("expected InvalidArgument");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidArgument);
  }
}

TEST_CASE("coefficient_of_variation matches the long double oracle") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> xs(1 + rng() % 500);
    std::vector<long double> xl;
    for (double& x : xs) xl.push_back(x = u(rng));
    CHECK(coefficient_of_variation(xs) == doctest::Approx(static_cast<double>(oracle::squashed_cv(xl))).epsilon(1e-12));
  }
}

TEST_CASE("composite_quality") {
  CHECK(composite_quality(0.7, 0.2, 0.9, {1, 0, 0}) == 0.7);
  CHECK(composite_quality(0.3, 0.6, 0.9, {}) == doctest::Approx(0.6).epsilon(1e-15));
  try {
    composite_quality(0.1, 0.1, 0.1, {0.5, 0.6, 0.1});
    FAIL("expected InvalidWeights");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidWeights);
  }
  CHECK_THROWS_AS(composite_quality(0.1, 0.1, 0.1, {1.2, -0.2, 0.0}), Error);
  CHECK_THROWS_AS(composite_quality(1.1, 0.1, 0.1, {}), Error);
  CHECK(QualityWeights{0.2, 0.3, 0.5}.valid());
  CHECK_FALSE(QualityWeights{0.2, 0.3, 0.6}.valid());
}

TEST_CASE("contrast_angle_score") {
  CHECK(contrast_angle_score(0, 180) == 1.0);
  CHECK(contrast_angle_score(30, 30) == 0.0);
  CHECK(contrast_angle_score(10, 100) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(contrast_angle_score(350, 10) == doctest::Approx(contrast_angle_score(0, 20)).epsilon(1e-14));
  CHECK(hue_separation(350, 10) == doctest::Approx(20.0));
  CHECK(hue_separation(0, 540) == doctest::Approx(180.0));
  for (int d = 0; d <= 180; ++d) {
    const double c = contrast_angle_score(0, d);
    CHECK(c == doctest::Approx((1 - std::cos(d * std::numbers::pi / 180)) / 2).epsilon(1e-14));
    CHECK(c == doctest::Approx(contrast_angle_score(0, 360 - d)).epsilon(1e-14));
  }
}

TEST_CASE("layout metrics") {
  SUBCASE("constant image is perfect") {
    const ImageTensor img(16, 16, 0.3, 0.6, 0.2);
    const LayoutMetrics m = layout_metrics(img, hue_histogram(img));
    CHECK(m.balance == 1.0);
    CHECK(m.continuity == 1.0);
    CHECK(m.integrity == 1.0);
    CHECK(m.unity == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("constant gray image") {
    const ImageTensor img(16, 16, 0.5, 0.5, 0.5);
    const LayoutMetrics m = layout_metrics(img, hue_histogram(img));
    CHECK(m.integrity == 1.0);
    CHECK(m.unity == 1.0);
  }
  SUBCASE("left black, right white") {
    const ImageTensor img = halves({0, 0, 0}, {1, 1, 1}, 16, 16);
    const LayoutMetrics m = layout_metrics(img, hue_histogram(img));
    CHECK(m.balance == doctest::Approx(0.5).epsilon(1e-9));
  }
  SUBCASE("two complementary hues") {
    const ImageTensor img = halves({1, 0, 0}, {0, 1, 1}, 16, 16);
    const LayoutMetrics m = layout_metrics(img, hue_histogram(img));
    CHECK(m.integrity == 1.0);
    CHECK(m.unity == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("errors") {
    const ImageTensor img(4, 4);
    CHECK_THROWS_AS(layout_metrics(img, hue_histogram(img), 1), Error);
    try {
      layout_metrics(img, hue_histogram(img), 8);
      FAIL("expected ImageTooSmall");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ImageTooSmall);
    }
  }
  SUBCASE("range on random images") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
      ImageTensor img(12 + t, 9 + t);
      for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) img.set_pixel(y, x, u(rng), u(rng), u(rng));
      const LayoutMetrics m = layout_metrics(img, hue_histogram(img));
      for (double v : {m.balance, m.continuity, m.integrity, m.unity}) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
}

TEST_CASE("score_image examples") {
  SUBCASE("solid red") {
    const QualityBreakdown q = score_image(ImageTensor(64, 64, 1, 0, 0));
    CHECK(q.q_hue == 0.0);
    CHECK(q.q_lightness == 0.0);
    CHECK(q.q_purity == 0.0);
    CHECK(q.q_total == 0.0);
  }
  SUBCASE("half red, half cyan") {
    const ImageTensor img = halves({1, 0, 0}, {0, 1, 1});
    const QualityBreakdown q = score_image(img);
    CHECK(q.q_hue == doctest::Approx(std::log(2.0) / std::log(36.0)).epsilon(1e-14));
    CHECK(score_image(img, {1, 0, 0}).q_total == q.q_hue);
    CHECK(q.entropy_raw == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  }
  SUBCASE("agrees with the oracle on mixed images") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 30; ++t) {
      ImageTensor img(16, 16);
      std::vector<Rgb> palette(1 + rng() % 5);
      for (auto& c : palette) c = {u(rng), u(rng), u(rng)};
      for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
          const Rgb& c = palette[static_cast<std::size_t>((y / 4 + x / 4) % static_cast<int>(palette.size()))];
          img.set_pixel(y, x, c.r, c.g, c.b);
        }
      const QualityBreakdown q = score_image(img);
      const oracle::Components want = oracle::components(img);
      CHECK(q.q_hue == doctest::Approx(static_cast<double>(want.q_hue)).epsilon(1e-12));
      CHECK(q.q_lightness == doctest::Approx(static_cast<double>(want.q_lightness)).epsilon(1e-12));
      CHECK(q.q_purity == doctest::Approx(static_cast<double>(want.q_purity)).epsilon(1e-12));
      CHECK(q.q_total ==
            doctest::Approx(static_cast<double>((want.q_hue + want.q_lightness + want.q_purity) / 3)).epsilon(1e-12));
    }
  }
  SUBCASE("invalid weights") {
    CHECK_THROWS_AS(score_image(ImageTensor(8, 8), {0.5, 0.5, 0.5}), Error);
  }
}

TEST_CASE("channel_stats") {
  const std::vector<double> xs = {0.0, 1.0};
  const ChannelStats st = channel_stats(xs);
  CHECK(st.mean == 0.5);
  CHECK(st.std == 0.5);
  CHECK(st.count == 2);
  CHECK_THROWS_AS(channel_stats(std::vector<double>{}), Error);
}
