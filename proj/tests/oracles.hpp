#pragma once

// Slow, independent reference computations used to cross-check the library.
// Everything here works on long double and per-pixel loops and deliberately
// shares no code with src/.

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "uicq/image.hpp"

namespace oracle {

struct HsvL {
  long double h, s, v;
};

// Sector-based hexcone conversion written out case by case.
inline HsvL hsv(long double r, long double g, long double b) {
  const long double mx = std::max({r, g, b});
  const long double mn = std::min({r, g, b});
  const long double d = mx - mn;
  HsvL out{0.0L, mx > 0.0L ? d / mx : 0.0L, mx};
  if (d == 0.0L) return out;
  long double h;
  if (mx == r) {
    h = 60.0L * ((g - b) / d);
    if (h < 0.0L) h += 360.0L;
  } else if (mx == g) {
    h = 60.0L * ((b - r) / d) + 120.0L;
  } else {
    h = 60.0L * ((r - g) / d) + 240.0L;
  }
  if (h >= 360.0L) h -= 360.0L;
  out.h = h;
  return out;
}

struct Histogram {
  std::map<int, long> counts;
  long chromatic = 0;
  long total = 0;
};

inline Histogram histogram(const uicq::ImageTensor& img, int bins, double sat_min, double val_min) {
  Histogram hist;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const HsvL p = hsv(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2));
      ++hist.total;
      if (p.s < sat_min || p.v < val_min) continue;
      int bin = static_cast<int>(std::floor(p.h * bins / 360.0L));
      bin = std::clamp(bin, 0, bins - 1);
      ++hist.counts[bin];
      ++hist.chromatic;
    }
  }
  return hist;
}

inline long double normalized_entropy(const Histogram& hist, int bins) {
  if (hist.chromatic == 0) return 0.0L;
  long double e = 0.0L;
  for (const auto& [bin, count] : hist.counts) {
    const long double p = static_cast<long double>(count) / hist.chromatic;
    e -= p * std::log(p);
  }
  return e / std::log(static_cast<long double>(bins));
}

// Population-std coefficient of variation, squashed as cv / (1 + cv).
inline long double squashed_cv(const std::vector<long double>& xs, long double eps = 1e-9L) {
  long double sum = 0.0L;
  for (long double x : xs) sum += x;
  const long double mean = sum / xs.size();
  if (mean < eps) return 0.0L;
  long double ss = 0.0L;
  for (long double x : xs) ss += (x - mean) * (x - mean);
  const long double cv = std::sqrt(ss / xs.size()) / mean;
  return cv / (1.0L + cv);
}

struct Components {
  long double q_hue, q_lightness, q_purity;
};

inline Components components(const uicq::ImageTensor& img, int bins = 36, double sat_min = 0.1,
                             double val_min = 0.1) {
  std::vector<long double> s, v;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const HsvL p = hsv(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2));
      s.push_back(p.s);
      v.push_back(p.v);
    }
  }
  return {normalized_entropy(histogram(img, bins, sat_min, val_min), bins), squashed_cv(v), squashed_cv(s)};
}

inline long double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const long double n = x.size();
  long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += static_cast<long double>(x[i]) * x[i];
    syy += static_cast<long double>(y[i]) * y[i];
    sxy += static_cast<long double>(x[i]) * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

}  // namespace oracle
