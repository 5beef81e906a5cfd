#include "uicq/colorspace.hpp"

#include <algorithm>
#include <cmath>

#include "uicq/error.hpp"

namespace uicq {

Hsv rgb_to_hsv(double r, double g, double b) noexcept {
  const double max = std::max({r, g, b});
  const double min = std::min({r, g, b});
  const double delta = max - min;

  Hsv out;
  out.v = max;
  out.s = max > 0.0 ? delta / max : 0.0;
  if (delta <= 0.0) {
    return out;
  }
  double h;
  if (max == r) {
    h = 60.0 * ((g - b) / delta);
  } else if (max == g) {
    h = 60.0 * ((b - r) / delta + 2.0);
  } else {
    h = 60.0 * ((r - g) / delta + 4.0);
  }
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  out.h = h;
  return out;
}

Rgb hsv_to_rgb(const Hsv& hsv) noexcept {
  double h = std::fmod(hsv.h, 360.0);
  if (h < 0.0) h += 360.0;
  const double c = hsv.v * hsv.s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r1 = 0.0, g1 = 0.0, b1 = 0.0;
  switch (static_cast<int>(hp)) {
    case 0: r1 = c; g1 = x; break;
    case 1: r1 = x; g1 = c; break;
    case 2: g1 = c; b1 = x; break;
    case 3: g1 = x; b1 = c; break;
    case 4: r1 = x; b1 = c; break;
    default: r1 = c; b1 = x; break;
  }
  const double m = hsv.v - c;
  return {std::clamp(r1 + m, 0.0, 1.0), std::clamp(g1 + m, 0.0, 1.0), std::clamp(b1 + m, 0.0, 1.0)};
}

HsvImage to_hsv(const ImageTensor& img) {
  HsvImage out;
  out.height = img.height();
  out.width = img.width();
  const std::size_t n = img.pixel_count();
  out.hue.resize(n);
  out.saturation.resize(n);
  out.value.resize(n);
  const auto data = img.data();
  for (std::size_t i = 0; i < n; ++i) {
    const Hsv p = rgb_to_hsv(data[3 * i], data[3 * i + 1], data[3 * i + 2]);
    out.hue[i] = p.h;
    out.saturation[i] = p.s;
    out.value[i] = p.v;
  }
  return out;
}

int hue_bin(double hue_degrees, int bins) noexcept {
  const int i = static_cast<int>(std::floor(hue_degrees * static_cast<double>(bins) / 360.0));
  return std::clamp(i, 0, bins - 1);
}

HueHistogram hue_histogram(const HsvImage& hsv, int bins, double sat_min, double val_min) {
  if (bins < 2) {
    throw Error(ErrorCode::InvalidArgument, "hue histogram needs at least 2 bins");
  }
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  std::size_t chromatic = 0;
  for (std::size_t i = 0; i < hsv.hue.size(); ++i) {
    if (hsv.saturation[i] >= sat_min && hsv.value[i] >= val_min) {
      ++counts[static_cast<std::size_t>(hue_bin(hsv.hue[i], bins))];
      ++chromatic;
    }
  }

  HueHistogram hist;
  hist.probs.assign(static_cast<std::size_t>(bins), 0.0);
  hist.chromatic_count = chromatic;
  if (chromatic > 0) {
    for (std::size_t i = 0; i < counts.size(); ++i) {
      hist.probs[i] = static_cast<double>(counts[i]) / static_cast<double>(chromatic);
    }
    hist.chromatic_fraction = static_cast<double>(chromatic) / static_cast<double>(hsv.hue.size());
  }
  return hist;
}

HueHistogram hue_histogram(const ImageTensor& img, int bins, double sat_min, double val_min) {
  return hue_histogram(to_hsv(img), bins, sat_min, val_min);
}

}  // namespace uicq
