#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "uicq/colorspace.hpp"
#include "uicq/image.hpp"
#include "uicq/metrics.hpp"

namespace uicq {

enum class LayoutKind { Blocks, Stripes, HeaderBody };

struct SynthSpec {
  LayoutKind kind = LayoutKind::Blocks;
  std::vector<Hsv> palette;
  int grid_rows = 1;
  int grid_cols = 1;
  int height = kDefaultInputSize;
  int width = kDefaultInputSize;
};

/// Flat-color rectangles; every sample is quantized to k / 255 so the image
/// survives a PPM round-trip unchanged.
///   Blocks:     grid_rows x grid_cols cells, each painted with a palette color drawn from the seed.
///   Stripes:    grid_cols equal-width vertical stripes cycling through the palette in order.
///   HeaderBody: a top band in palette[0], the body in palette[1], and a
///               grid_rows x grid_cols array of cards cycling through the remaining colors.
/// Throws InvalidArgument for an empty palette or non-positive sizes.
ImageTensor generate_interface(const SynthSpec& spec, std::uint64_t seed);

/// Draws layout kind, palette and grid from `rng`. The palette has 1-6 colors
/// (at most `hue_bins`), each with a hue in a distinct bin of a `hue_bins`
/// histogram and at least 20% of a bin width from its edges.
SynthSpec random_spec(std::mt19937_64& rng, int height = kDefaultInputSize, int width = kDefaultInputSize,
                      int hue_bins = kDefaultHueBins);

/// Per-dimension rating names, in report order.
inline constexpr std::array<const char*, 4> kRatingDimensions = {"contrast", "clarity", "color_coordination",
                                                                 "visual_appeal"};

/// Analytic stand-ins for the four rating dimensions:
///   contrast           - contrast_angle_score between the two most populated hue bins (0 if fewer than two)
///   clarity            - q_lightness
///   color_coordination - unity
///   visual_appeal      - q_total
std::map<std::string, double> oracle_dimensions(const ImageTensor& img, const QualityWeights& w = {},
                                                const MetricConfig& cfg = {});

struct AnnotatedSample {
  std::string path;  // relative to the manifest directory
  double score = 0.0;
  std::map<std::string, double> dims;
};

struct Manifest {
  std::filesystem::path directory;
  std::vector<AnnotatedSample> samples;

  std::filesystem::path resolve(const AnnotatedSample& s) const { return directory / s.path; }
};

/// One JSON object per line: {"path": ..., "score": ..., "dims": {...}}.
/// Throws IoFailure or MalformedFile (bad record, score outside [0,1]).
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<AnnotatedSample>& samples);
std::string manifest_line(const AnnotatedSample& s);

struct DatasetOptions {
  double noise = 0.02;        // labels get uniform noise in [-noise, noise], then clamped to [0,1]
  bool with_dims = false;
  int height = kDefaultInputSize;
  int width = kDefaultInputSize;
  QualityWeights weights;
  MetricConfig metric;
  std::string manifest_name = "manifest.jsonl";
};

/// Writes `count` PPM images plus the manifest into `out_dir` and returns the samples.
/// Labels are score_image(...).q_total of the written image (plus optional noise).
/// Throws InvalidArgument (count < 1, noise outside [0, 0.5]) or IoFailure.
std::vector<AnnotatedSample> generate_dataset(int count, std::uint64_t seed, const std::filesystem::path& out_dir,
                                              const DatasetOptions& opts = {});

}  // namespace uicq
