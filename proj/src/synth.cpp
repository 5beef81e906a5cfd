#include "uicq/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>

#include "json.hpp"

#include "uicq/error.hpp"

namespace uicq {

namespace {

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit(rng); }
int below(std::mt19937_64& rng, int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); }

Rgb quantized(const Hsv& c) {
  const Rgb rgb = hsv_to_rgb(c);
  auto q = [](double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; };
  return {q(rgb.r), q(rgb.g), q(rgb.b)};
}

void fill_rect(ImageTensor& img, int y0, int y1, int x0, int x1, const Rgb& c) {
  for (int y = std::max(0, y0); y < std::min(img.height(), y1); ++y)
    for (int x = std::max(0, x0); x < std::min(img.width(), x1); ++x) img.set_pixel(y, x, c.r, c.g, c.b);
}

}  // namespace

ImageTensor generate_interface(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.palette.empty()) {
    throw Error(ErrorCode::InvalidArgument, "synthetic interface needs a nonempty palette");
  }
  if (spec.grid_rows < 1 || spec.grid_cols < 1 || spec.height < 1 || spec.width < 1) {
    throw Error(ErrorCode::InvalidArgument, "synthetic interface grid and size must be positive");
  }
  std::vector<Rgb> colors;
  colors.reserve(spec.palette.size());
  for (const auto& c : spec.palette) colors.push_back(quantized(c));
  const int n_colors = static_cast<int>(colors.size());

  std::mt19937_64 rng(seed);
  const int h = spec.height, w = spec.width;
  ImageTensor img(h, w, colors[0].r, colors[0].g, colors[0].b);

  switch (spec.kind) {
    case LayoutKind::Blocks:
      for (int gy = 0; gy < spec.grid_rows; ++gy)
        for (int gx = 0; gx < spec.grid_cols; ++gx)
          fill_rect(img, gy * h / spec.grid_rows, (gy + 1) * h / spec.grid_rows, gx * w / spec.grid_cols,
                    (gx + 1) * w / spec.grid_cols, colors[static_cast<std::size_t>(below(rng, n_colors))]);
      break;
    case LayoutKind::Stripes:
      for (int gx = 0; gx < spec.grid_cols; ++gx)
        fill_rect(img, 0, h, gx * w / spec.grid_cols, (gx + 1) * w / spec.grid_cols,
                  colors[static_cast<std::size_t>(gx % n_colors)]);
      break;
    case LayoutKind::HeaderBody: {
      const int header = std::max(1, static_cast<int>(std::lround(h * uniform(rng, 0.12, 0.3))));
      fill_rect(img, header, h, 0, w, colors[static_cast<std::size_t>(std::min(1, n_colors - 1))]);
      if (n_colors > 2) {
        const int margin = std::max(1, w / 16);
        const int body_h = h - header;
        int k = 0;
        for (int gy = 0; gy < spec.grid_rows; ++gy) {
          for (int gx = 0; gx < spec.grid_cols; ++gx, ++k) {
            const Rgb& c = colors[static_cast<std::size_t>(2 + k % (n_colors - 2))];
            fill_rect(img, header + gy * body_h / spec.grid_rows + margin,
                      header + (gy + 1) * body_h / spec.grid_rows - margin, gx * w / spec.grid_cols + margin,
                      (gx + 1) * w / spec.grid_cols - margin, c);
          }
        }
      }
      break;
    }
  }
  return img;
}

SynthSpec random_spec(std::mt19937_64& rng, int height, int width, int hue_bins) {
  if (hue_bins < 1) {
    throw Error(ErrorCode::InvalidArgument, "hue bin count must be positive");
  }
  SynthSpec spec;
  spec.height = height;
  spec.width = width;
  spec.kind = static_cast<LayoutKind>(below(rng, 3));
  const int n = std::min(1 + below(rng, 6), hue_bins);
  const double bin_width = 360.0 / hue_bins;
  std::vector<int> used;
  for (int i = 0; i < n; ++i) {
    // Each color takes its own hue bin and stays clear of the bin edges.
    int bin = below(rng, hue_bins);
    while (std::find(used.begin(), used.end(), bin) != used.end()) bin = below(rng, hue_bins);
    used.push_back(bin);
    Hsv c;
    c.h = (bin + 0.5 + uniform(rng, -0.3, 0.3)) * bin_width;
    // Roughly one color in five is a neutral (near-gray) surface.
    c.s = unit(rng) < 0.2 ? uniform(rng, 0.0, 0.08) : uniform(rng, 0.15, 1.0);
    c.v = uniform(rng, 0.15, 1.0);
    spec.palette.push_back(c);
  }
  spec.grid_rows = 1 + below(rng, 6);
  spec.grid_cols = spec.kind == LayoutKind::Stripes ? 2 + below(rng, 7) : 1 + below(rng, 6);
  return spec;
}

std::map<std::string, double> oracle_dimensions(const ImageTensor& img, const QualityWeights& w,
                                                const MetricConfig& cfg) {
  const QualityBreakdown q = score_image(img, w, cfg);
  const HueHistogram hist = hue_histogram(img, cfg.hue_bins, cfg.sat_min, cfg.val_min);

  std::vector<int> order(static_cast<std::size_t>(hist.bins()));
  for (int i = 0; i < hist.bins(); ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return hist.probs[static_cast<std::size_t>(a)] > hist.probs[static_cast<std::size_t>(b)];
  });
  double contrast = 0.0;
  if (hist.chromatic_count > 0 && hist.probs[static_cast<std::size_t>(order[1])] > 0.0) {
    contrast = contrast_angle_score(hist.bin_center_degrees(order[0]), hist.bin_center_degrees(order[1]));
  }
  return {{"contrast", contrast},
          {"clarity", q.q_lightness},
          {"color_coordination", q.layout.unity},
          {"visual_appeal", q.q_total}};
}

// ---------------------------------------------------------------------------
// Manifest

std::string manifest_line(const AnnotatedSample& s) {
  nlohmann::json j;
  j["path"] = s.path;
  j["score"] = s.score;
  if (!s.dims.empty()) {
    nlohmann::json dims = nlohmann::json::object();
    for (const auto& [k, v] : s.dims) dims[k] = v;
    j["dims"] = dims;
  }
  return j.dump();
}

void write_manifest(const std::filesystem::path& path, const std::vector<AnnotatedSample>& samples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  }
  for (const auto& s : samples) out << manifest_line(s) << '\n';
  if (!out) {
    throw Error(ErrorCode::IoFailure, "write error on " + path.string());
  }
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::IoFailure, "cannot open manifest " + path.string());
  }
  Manifest m;
  m.directory = path.parent_path();
  std::string line;
  int line_no = 0;
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    try {
      const auto j = nlohmann::json::parse(line);
      AnnotatedSample s;
      s.path = j.at("path").get<std::string>();
      s.score = j.at("score").get<double>();
      if (!in_unit(s.score)) {
        throw Error(ErrorCode::MalformedFile, where + ": score outside [0,1]");
      }
      if (j.contains("dims")) {
        for (const auto& [k, v] : j.at("dims").items()) {
          const double d = v.get<double>();
          if (!in_unit(d)) {
            throw Error(ErrorCode::MalformedFile, where + ": dimension " + k + " outside [0,1]");
          }
          s.dims[k] = d;
        }
      }
      m.samples.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedFile, where + ": " + e.what());
    }
  }
  return m;
}

std::vector<AnnotatedSample> generate_dataset(int count, std::uint64_t seed, const std::filesystem::path& out_dir,
                                              const DatasetOptions& opts) {
  if (count < 1) {
    throw Error(ErrorCode::InvalidArgument, "dataset count must be at least 1");
  }
  if (!(opts.noise >= 0.0 && opts.noise <= 0.5)) {
    throw Error(ErrorCode::InvalidArgument, "label noise must be in [0, 0.5]");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw Error(ErrorCode::IoFailure, "cannot create " + out_dir.string() + ": " + ec.message());
  }

  std::mt19937_64 rng(seed);
  std::vector<AnnotatedSample> samples;
  samples.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const SynthSpec spec = random_spec(rng, opts.height, opts.width, opts.metric.hue_bins);
    const std::uint64_t image_seed = rng();
    const double noise_draw = uniform(rng, -1.0, 1.0);
    std::array<double, kRatingDimensions.size()> dim_draws{};
    for (double& d : dim_draws) d = uniform(rng, -1.0, 1.0);

    const ImageTensor img = generate_interface(spec, image_seed);
    char name[32];
    std::snprintf(name, sizeof name, "img_%05d.ppm", i);
    write_ppm(out_dir / name, img);

    auto noisy = [&](double v, double draw) { return std::clamp(v + opts.noise * draw, 0.0, 1.0); };
    AnnotatedSample s;
    s.path = name;
    s.score = noisy(score_image(img, opts.weights, opts.metric).q_total, noise_draw);
    if (opts.with_dims) {
      const auto dims = oracle_dimensions(img, opts.weights, opts.metric);
      for (std::size_t d = 0; d < kRatingDimensions.size(); ++d) {
        s.dims[kRatingDimensions[d]] = noisy(dims.at(kRatingDimensions[d]), dim_draws[d]);
      }
    }
    samples.push_back(std::move(s));
  }
  write_manifest(out_dir / opts.manifest_name, samples);
  return samples;
}

}  // namespace uicq
