#pragma once

#include <cstddef>
#include <vector>

#include "uicq/image.hpp"

namespace uicq {

struct Hsv {
  double h = 0.0;  // degrees, [0, 360)
  double s = 0.0;  // [0, 1]
  double v = 0.0;  // [0, 1]
};

/// Standard hexcone conversion. Achromatic input (max == min) gets h = 0.
Hsv rgb_to_hsv(double r, double g, double b) noexcept;

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
};

/// Inverse of rgb_to_hsv; hue is taken modulo 360.
Rgb hsv_to_rgb(const Hsv& hsv) noexcept;

/// Per-pixel HSV planes of an image, row-major.
struct HsvImage {
  int height = 0;
  int width = 0;
  std::vector<double> hue;
  std::vector<double> saturation;
  std::vector<double> value;
};

HsvImage to_hsv(const ImageTensor& img);

inline constexpr int kDefaultHueBins = 36;
inline constexpr double kDefaultSatMin = 0.1;
inline constexpr double kDefaultValMin = 0.1;

/// Quantized hue distribution over the chromatic pixels of an image.
/// Bin i covers [i * 360 / n, (i + 1) * 360 / n).
struct HueHistogram {
  std::vector<double> probs;
  double chromatic_fraction = 0.0;
  std::size_t chromatic_count = 0;

  int bins() const noexcept { return static_cast<int>(probs.size()); }
  double bin_center_degrees(int i) const noexcept {
    return (static_cast<double>(i) + 0.5) * 360.0 / static_cast<double>(probs.size());
  }
};

/// Bin index for a hue in degrees; hues at or above 360 land in the last bin.
int hue_bin(double hue_degrees, int bins) noexcept;

/// Counts pixels with s >= sat_min and v >= val_min. An image with no such
/// pixel yields all-zero probabilities and chromatic_fraction 0.
/// Throws InvalidArgument when bins < 2.
HueHistogram hue_histogram(const ImageTensor& img, int bins = kDefaultHueBins,
                           double sat_min = kDefaultSatMin, double val_min = kDefaultValMin);
HueHistogram hue_histogram(const HsvImage& hsv, int bins, double sat_min, double val_min);

}  // namespace uicq
