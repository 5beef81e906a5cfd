#include "uicq/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "uicq/error.hpp"

namespace uicq {

bool QualityWeights::valid() const noexcept {
  if (!(alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0)) return false;
  return std::abs(alpha + beta + gamma - 1.0) <= kSumTolerance;
}

void QualityWeights::validate() const {
  if (!valid()) {
    throw Error(ErrorCode::InvalidWeights, "weights must be nonnegative and sum to 1 (got " +
                                               std::to_string(alpha) + ", " + std::to_string(beta) +
                                               ", " + std::to_string(gamma) + ")");
  }
}

ChannelStats channel_stats(std::span<const double> values) {
  if (values.empty()) {
    throw Error(ErrorCode::EmptyInput, "channel statistics of an empty sample");
  }
  // A constant sample has mean exactly its value and zero spread; the general
  // formula would leave rounding residue of order 1e-16 in both.
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == *hi) return {*lo, 0.0, values.size()};

  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n), values.size()};
}

double raw_hue_entropy(const HueHistogram& hist) noexcept {
  double e = 0.0;
  for (double p : hist.probs) {
    if (p > 0.0) e -= p * std::log(p);
  }
  return e;
}

double hue_entropy(const HueHistogram& hist) noexcept {
  if (hist.chromatic_count == 0 || hist.bins() < 2) return 0.0;
  const double q = raw_hue_entropy(hist) / std::log(static_cast<double>(hist.bins()));
  return std::clamp(q, 0.0, 1.0);
}

double raw_coefficient_of_variation(std::span<const double> values, double eps) {
  if (values.empty()) {
    throw Error(ErrorCode::EmptyInput, "coefficient of variation of an empty sample");
  }
  if (std::any_of(values.begin(), values.end(), [](double v) { return v < 0.0; })) {
    throw Error(ErrorCode::InvalidArgument, "coefficient of variation needs nonnegative values");
  }
  const ChannelStats st = channel_stats(values);
  if (st.mean < eps) return 0.0;
  return st.std / st.mean;
}

double coefficient_of_variation(std::span<const double> values, double eps) {
  const double cv = raw_coefficient_of_variation(values, eps);
  return cv / (1.0 + cv);
}

double composite_quality(double q_hue, double q_lightness, double q_purity, const QualityWeights& w) {
  w.validate();
  for (double q : {q_hue, q_lightness, q_purity}) {
    if (!(q >= 0.0 && q <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "quality component outside [0,1]");
    }
  }
  // Weights may be off by up to kSumTolerance, so keep the result inside [0, 1].
  return std::clamp(w.alpha * q_hue + w.beta * q_lightness + w.gamma * q_purity, 0.0, 1.0);
}

double hue_separation(double h1, double h2) noexcept {
  const double d = std::fmod(std::abs(h1 - h2), 360.0);
  return std::min(d, 360.0 - d);
}

double contrast_angle_score(double h1, double h2) noexcept {
  const double delta = hue_separation(h1, h2) * (std::numbers::pi / 180.0);
  return std::clamp((1.0 - std::cos(delta)) / 2.0, 0.0, 1.0);
}

namespace {

double symmetry_term(double a, double b) {
  return std::clamp(1.0 - std::abs(a - b) / (a + b + kMetricEps), 0.0, 1.0);
}

double balance_of(const ImageTensor& img) {
  const int h = img.height();
  const int w = img.width();
  auto lum = [&](int y, int x) { return luminance(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2)); };

  double left = 0.0, right = 0.0, top = 0.0, bottom = 0.0;
  const int half_w = w / 2;
  const int half_h = h / 2;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double l = lum(y, x);
      if (x < half_w) left += l;
      if (x >= w - half_w) right += l;
      if (y < half_h) top += l;
      if (y >= h - half_h) bottom += l;
    }
  }
  return 0.5 * (symmetry_term(left, right) + symmetry_term(top, bottom));
}

double continuity_of(const ImageTensor& img, int grid) {
  const int h = img.height();
  const int w = img.width();
  std::vector<std::array<double, 3>> cells(static_cast<std::size_t>(grid * grid));
  for (int gy = 0; gy < grid; ++gy) {
    const int y0 = gy * h / grid;
    const int y1 = (gy + 1) * h / grid;
    for (int gx = 0; gx < grid; ++gx) {
      const int x0 = gx * w / grid;
      const int x1 = (gx + 1) * w / grid;
      std::array<double, 3> sum{};
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          for (int c = 0; c < 3; ++c) sum[static_cast<std::size_t>(c)] += img.at(y, x, c);
        }
      }
      const double n = static_cast<double>((y1 - y0) * (x1 - x0));
      for (double& s : sum) s /= n;
      cells[static_cast<std::size_t>(gy * grid + gx)] = sum;
    }
  }
  auto dist = [&](int a, int b) {
    const auto& p = cells[static_cast<std::size_t>(a)];
    const auto& q = cells[static_cast<std::size_t>(b)];
    return std::sqrt((p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]) +
                     (p[2] - q[2]) * (p[2] - q[2]));
  };
  double total = 0.0;
  int pairs = 0;
  for (int gy = 0; gy < grid; ++gy) {
    for (int gx = 0; gx < grid; ++gx) {
      const int i = gy * grid + gx;
      if (gx + 1 < grid) {
        total += dist(i, i + 1);
        ++pairs;
      }
      if (gy + 1 < grid) {
        total += dist(i, i + grid);
        ++pairs;
      }
    }
  }
  return std::clamp(1.0 - (total / pairs) / std::sqrt(3.0), 0.0, 1.0);
}

double integrity_of(const HueHistogram& hist) {
  if (hist.chromatic_count == 0) return 1.0;
  std::vector<double> sorted = hist.probs;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double top = 0.0;
  for (std::size_t i = 0; i < std::min<std::size_t>(3, sorted.size()); ++i) top += sorted[i];
  return std::clamp(top, 0.0, 1.0);
}

double unity_of(const HueHistogram& hist) {
  if (hist.chromatic_count == 0) return 1.0;
  double re = 0.0, im = 0.0;
  for (int i = 0; i < hist.bins(); ++i) {
    const double theta = hist.bin_center_degrees(i) * (std::numbers::pi / 180.0);
    re += hist.probs[static_cast<std::size_t>(i)] * std::cos(theta);
    im += hist.probs[static_cast<std::size_t>(i)] * std::sin(theta);
  }
  return std::clamp(std::hypot(re, im), 0.0, 1.0);
}

}  // namespace

LayoutMetrics layout_metrics(const ImageTensor& img, const HueHistogram& hist, int grid) {
  if (grid < 2) {
    throw Error(ErrorCode::InvalidArgument, "layout grid must be at least 2");
  }
  if (img.height() < grid || img.width() < grid) {
    throw Error(ErrorCode::ImageTooSmall, "image is smaller than the " + std::to_string(grid) + "x" +
                                              std::to_string(grid) + " layout grid");
  }
  return {balance_of(img), continuity_of(img, grid), integrity_of(hist), unity_of(hist)};
}

QualityBreakdown score_image(const ImageTensor& img, const QualityWeights& w, const MetricConfig& cfg) {
  w.validate();
  const HsvImage hsv = to_hsv(img);
  const HueHistogram hist = hue_histogram(hsv, cfg.hue_bins, cfg.sat_min, cfg.val_min);

  QualityBreakdown out;
  out.entropy_raw = raw_hue_entropy(hist);
  out.q_hue = hue_entropy(hist);
  out.cv_lightness_raw = raw_coefficient_of_variation(hsv.value, cfg.eps);
  out.cv_purity_raw = raw_coefficient_of_variation(hsv.saturation, cfg.eps);
  out.q_lightness = out.cv_lightness_raw / (1.0 + out.cv_lightness_raw);
  out.q_purity = out.cv_purity_raw / (1.0 + out.cv_purity_raw);
  out.q_total = composite_quality(out.q_hue, out.q_lightness, out.q_purity, w);
  out.layout = layout_metrics(img, hist, cfg.grid);
  out.chromatic_fraction = hist.chromatic_fraction;
  return out;
}

}  // namespace uicq
