#pragma once

#include <span>

#include "uicq/colorspace.hpp"
#include "uicq/image.hpp"

namespace uicq {

/// Division guard shared by every ratio in this module.
inline constexpr double kMetricEps = 1e-9;
inline constexpr int kDefaultLayoutGrid = 8;

/// Convex weights of the composite score; must be nonnegative and sum to 1.
struct QualityWeights {
  double alpha = 1.0 / 3.0;  // hue
  double beta = 1.0 / 3.0;   // lightness
  double gamma = 1.0 / 3.0;  // purity

  static constexpr double kSumTolerance = 1e-9;

  bool valid() const noexcept;
  /// Throws InvalidWeights.
  void validate() const;
};

struct ChannelStats {
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t count = 0;
};

/// Throws EmptyInput on an empty span.
ChannelStats channel_stats(std::span<const double> values);

/// Shannon entropy of the hue distribution in nats (0 for an empty histogram).
double raw_hue_entropy(const HueHistogram& hist) noexcept;
/// Entropy divided by ln(n): 1 for the uniform distribution, 0 for a single bin
/// or an image without chromatic pixels.
double hue_entropy(const HueHistogram& hist) noexcept;

/// sigma / mu with population sigma; 0 when mu < eps.
/// Throws EmptyInput, or InvalidArgument for negative values.
double raw_coefficient_of_variation(std::span<const double> values, double eps = kMetricEps);
/// cv / (1 + cv), the squashed form used as a [0,1] quality component.
double coefficient_of_variation(std::span<const double> values, double eps = kMetricEps);

/// alpha * q_hue + beta * q_lightness + gamma * q_purity.
/// Throws InvalidWeights or InvalidArgument (component outside [0,1]).
double composite_quality(double q_hue, double q_lightness, double q_purity, const QualityWeights& w);

/// Circular hue separation in [0, 180] degrees.
double hue_separation(double h1, double h2) noexcept;
/// (1 - cos(separation)) / 2: zero for equal hues, one for complementary hues.
double contrast_angle_score(double h1, double h2) noexcept;

struct LayoutMetrics {
  double balance = 1.0;
  double continuity = 1.0;
  double integrity = 1.0;
  double unity = 1.0;
};

/// Relative luminance weights (Rec. 709) used by the balance term.
inline double luminance(double r, double g, double b) noexcept {
  return 0.2126 * r + 0.7152 * g + 0.0722 * b;
}

/// balance: mean over the left/right and top/bottom splits of
///   1 - |m_a - m_b| / (m_a + m_b + eps), m = summed luminance of a half
///   (odd dimensions leave the middle line out of both halves).
/// continuity: 1 - mean RGB distance between 4-adjacent cell means / sqrt(3)
///   on a grid x grid partition.
/// integrity: probability mass of the three most populated hue bins.
/// unity: mean resultant length of the hue distribution at bin centers.
/// integrity and unity are 1 when the histogram has no chromatic pixels.
/// Throws InvalidArgument (grid < 2) or ImageTooSmall.
LayoutMetrics layout_metrics(const ImageTensor& img, const HueHistogram& hist, int grid = kDefaultLayoutGrid);

struct MetricConfig {
  int hue_bins = kDefaultHueBins;
  double sat_min = kDefaultSatMin;
  double val_min = kDefaultValMin;
  int grid = kDefaultLayoutGrid;
  double eps = kMetricEps;
};

struct QualityBreakdown {
  double q_hue = 0.0;
  double q_lightness = 0.0;
  double q_purity = 0.0;
  double q_total = 0.0;
  LayoutMetrics layout;
  double entropy_raw = 0.0;
  double cv_lightness_raw = 0.0;
  double cv_purity_raw = 0.0;
  double chromatic_fraction = 0.0;
};

QualityBreakdown score_image(const ImageTensor& img, const QualityWeights& w = {},
                             const MetricConfig& cfg = {});

}  // namespace uicq
