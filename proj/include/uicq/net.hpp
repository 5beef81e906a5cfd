#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "uicq/image.hpp"

namespace uicq {

/// H x W x D activation tensor, row-major with channels innermost.
struct FeatureMap {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(int h, int w, int c, double fill = 0.0)
      : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, fill) {}

  static FeatureMap from_image(const ImageTensor& img);

  std::size_t spatial_size() const noexcept { return static_cast<std::size_t>(height) * width; }
  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  double at(int y, int x, int c) const noexcept { return data[index(y, x, c)]; }
  double& at(int y, int x, int c) noexcept { return data[index(y, x, c)]; }

  bool operator==(const FeatureMap&) const = default;
};

/// Cross-correlation kernel. Weights are stored out_ch x in_ch x k x k.
struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int padding = 1;
  std::vector<double> weights;
  std::vector<double> bias;

  ConvLayer() = default;
  ConvLayer(int in_ch, int out_ch, int k, int stride_ = 1, int pad = -1);

  std::size_t weight_index(int oc, int ic, int ky, int kx) const noexcept {
    return ((static_cast<std::size_t>(oc) * in_channels + ic) * kernel + ky) * kernel + kx;
  }

  bool operator==(const ConvLayer&) const = default;
};

/// Zero-padded cross-correlation plus bias. Output size per axis is
/// floor((n + 2 * padding - kernel) / stride) + 1. Throws ShapeMismatch.
FeatureMap conv_forward(const FeatureMap& input, const ConvLayer& layer);
FeatureMap relu(const FeatureMap& map);
/// 2x2 stride-2 max pooling; odd trailing rows/columns are dropped.
FeatureMap maxpool2(const FeatureMap& map);
/// Per-channel spatial mean.
std::vector<double> global_avg_pool(const FeatureMap& map);
/// For each map in order: D per-channel means, then D per-channel population stds.
/// Throws EmptyInput on an empty list.
std::vector<double> shallow_stats(std::span<const FeatureMap> maps);

/// Concatenated descriptor: GAP of the deepest map, then shallow stats of the first k maps.
struct FeatureVector {
  std::vector<double> data;
  std::size_t gap_length = 0;
  std::vector<std::size_t> stats_lengths;  // 2 * D_l per shallow layer
};

/// Throws BadLayerSelection unless 1 <= shallow_count < maps.size().
FeatureVector build_feature_vector(std::span<const FeatureMap> maps, int shallow_count);

/// One conv + ReLU stage, optionally followed by 2x2 max pooling.
struct LayerSpec {
  int in_channels = 3;
  int out_channels = 8;
  int kernel = 3;
  int stride = 1;
  int padding = 1;
  bool pool = false;

  bool operator==(const LayerSpec&) const = default;
};

struct Architecture {
  int input_height = kDefaultInputSize;
  int input_width = kDefaultInputSize;
  std::vector<LayerSpec> layers;
  int shallow_count = 2;

  /// 64x64x3 -> conv3x3x8 + pool -> conv3x3x16 + pool -> conv3x3x32, shallow k = 2.
  static Architecture standard(int input_size = kDefaultInputSize);
  /// 8x8x3 -> conv3x3x2 + pool -> conv3x3x3, k = 1; used for gradient checks.
  static Architecture toy();

  /// Throws InvalidArgument / BadLayerSelection for an inconsistent stack.
  void validate() const;
  std::size_t feature_length() const;

  bool operator==(const Architecture&) const = default;
};

/// All learnable parameters plus the metadata needed to rebuild the model.
struct ModelParams {
  Architecture arch;
  std::vector<ConvLayer> layers;
  std::vector<double> head_weights;
  double head_bias = 0.0;
  std::uint64_t seed = 0;
  std::string target = "score";  // manifest label column the model was trained on

  /// Zero-valued parameters with the shapes implied by `arch`.
  static ModelParams zeros(const Architecture& arch);

  /// Every parameter array in declaration order: per layer weights then bias,
  /// then head weights, then the head bias.
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;
  std::size_t parameter_count() const;

  bool operator==(const ModelParams&) const = default;
};

/// Glorot-uniform weights, zero biases. Draws come from std::mt19937_64(seed)
/// mapped to [0,1) as (x >> 11) * 2^-53, consumed layer by layer then head.
ModelParams init_params(const Architecture& arch, std::uint64_t seed);

/// Pixels enter the first convolution as x - kInputCenter.
inline constexpr double kInputCenter = 0.5;

/// Full conv stack; returns F_1..F_L (post-ReLU, pre-pool).
std::vector<FeatureMap> extract_features(const ImageTensor& img, const ModelParams& params);
FeatureVector feature_vector(const ImageTensor& img, const ModelParams& params);

/// logistic(w . z + b). Throws ShapeMismatch if the image size differs from the architecture input.
double forward(const ImageTensor& img, const ModelParams& params);

struct TrainingSample {
  ImageTensor image;
  double label = 0.0;
};

struct LossAndGrad {
  double loss = 0.0;
  ModelParams grad;
  double max_abs_logit = 0.0;
};

/// Mean squared error over the batch and its exact gradient.
/// Per-sample gradients may be computed on `threads` workers; they are summed
/// in sample order so the result does not depend on the thread count.
/// Throws EmptyBatch or InvalidArgument (label outside [0,1]).
LossAndGrad loss_and_grad(std::span<const TrainingSample> batch, const ModelParams& params,
                          unsigned threads = 1);
double batch_loss(std::span<const TrainingSample> batch, const ModelParams& params);

struct TrainConfig {
  Architecture arch = Architecture::standard();
  int epochs = 50;
  double learning_rate = 6.0;
  int batch_size = 16;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct TrainResult {
  ModelParams params;
  std::vector<double> loss_trace;  // sample-weighted mean minibatch loss per epoch
};

/// Logits beyond this magnitude underflow the logistic derivative to exactly zero.
inline constexpr double kLogitDivergenceLimit = 700.0;

/// logit of the mean label (clamped to [0.001, 0.999]); 0 for an empty set.
double initial_head_bias(std::span<const TrainingSample> data);

/// Plain minibatch gradient descent with per-epoch Fisher-Yates shuffling
/// (std::mt19937_64 seeded with seed ^ 0x9e3779b97f4a7c15, rejection-sampled indices).
/// Starts from init_params(cfg.arch, cfg.seed) with the head bias set to initial_head_bias(data).
/// Throws EmptyDataset, InvalidArgument, or DivergedLoss when the loss or any
/// parameter stops being finite or a logit passes kLogitDivergenceLimit.
TrainResult train(std::span<const TrainingSample> data, const TrainConfig& cfg,
                  const std::function<void(int epoch, double loss)>& on_epoch = {});

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t worst_index = 0;
};

/// Central finite differences of batch_loss against loss_and_grad for every parameter.
/// rel = |analytic - numeric| / max(|analytic|, |numeric|, floor).
GradCheckResult gradient_check(std::span<const TrainingSample> batch, const ModelParams& params,
                               double step = 1e-4, double floor = 1e-8);

/// Checkpoint container, all integers and floats little-endian:
///   "UICQCKPT" | u32 version | u32 input_h | u32 input_w | u32 layer_count | u32 shallow_count
///   | layer_count x (u32 in, out, kernel, stride, padding, pool) | u64 seed
///   | u32 target_len | target bytes | u64 weight_count | weight_count x f64
///   | u32 CRC-32 of every preceding byte
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(const ModelParams& params);
/// Throws CorruptCheckpoint or VersionMismatch.
ModelParams deserialize_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace uicq
