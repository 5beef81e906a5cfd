#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace uicq {

/// Default model input resolution (square).
inline constexpr int kDefaultInputSize = 64;

/// H x W x 3 image, row-major interleaved RGB, every sample in [0, 1].
class ImageTensor {
 public:
  static constexpr int kChannels = 3;

  ImageTensor() = default;
  /// Constant-color image.
  ImageTensor(int height, int width, double r = 0.0, double g = 0.0, double b = 0.0);
  /// Takes ownership of `data`; throws InvalidArgument if the size or value range is wrong.
  ImageTensor(int height, int width, std::vector<double> data);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return kChannels; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const double> data() const noexcept { return data_; }

  double at(int y, int x, int c) const noexcept { return data_[index(y, x, c)]; }
  // Caller keeps the value inside [0, 1].
  void set(int y, int x, int c, double v) noexcept { data_[index(y, x, c)] = v; }
  void set_pixel(int y, int x, double r, double g, double b) noexcept {
    const std::size_t i = index(y, x, 0);
    data_[i] = r;
    data_[i + 1] = g;
    data_[i + 2] = b;
  }

  bool operator==(const ImageTensor&) const = default;

 private:
  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
               kChannels +
           static_cast<std::size_t>(c);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

enum class ImageFormat { Png, Ppm };

/// Sniffs the magic bytes; throws UnsupportedFormat for anything else.
ImageFormat detect_format(std::span<const std::uint8_t> bytes);

/// Decodes 8-bit PNG (gray, gray+alpha, palette, RGB, RGBA) or binary P6 PPM with maxval 255.
/// Samples are channel / 255. Alpha is dropped, not composited. Gray is replicated to RGB.
ImageTensor decode_image(std::span<const std::uint8_t> bytes, ImageFormat format);
ImageTensor decode_image(std::span<const std::uint8_t> bytes);

/// Binary P6 with maxval 255; samples are quantized with round(v * 255).
std::vector<std::uint8_t> encode_ppm(const ImageTensor& img);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

ImageTensor read_image(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const ImageTensor& img);

/// Bilinear resampling with half-pixel centers:
///   src = (dst + 0.5) * src_size / dst_size - 0.5, clamped to [0, src_size - 1],
/// blended from floor(src) and floor(src) + 1 (clamped), rows then columns.
/// Same-size requests return an exact copy.
ImageTensor resize_bilinear(const ImageTensor& img, int target_h, int target_w);

}  // namespace uicq
