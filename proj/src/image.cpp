#include "uicq/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>

#include "uicq/error.hpp"

namespace uicq {

ImageTensor::ImageTensor(int height, int width, double r, double g, double b)
    : height_(height), width_(width) {
  if (height < 1 || width < 1) {
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  }
  data_.resize(pixel_count() * kChannels);
  for (std::size_t i = 0; i < data_.size(); i += kChannels) {
    data_[i] = r;
    data_[i + 1] = g;
    data_[i + 2] = b;
  }
}

ImageTensor::ImageTensor(int height, int width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height < 1 || width < 1) {
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  }
  if (data_.size() != pixel_count() * kChannels) {
    throw Error(ErrorCode::InvalidArgument, "image data length does not match H*W*3");
  }
  for (double v : data_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "image sample outside [0,1]");
    }
  }
}

namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::vector<double> bytes_to_unit(std::span<const std::uint8_t> rgb) {
  std::vector<double> out(rgb.size());
  std::transform(rgb.begin(), rgb.end(), out.begin(),
                 [](std::uint8_t b) { return static_cast<double>(b) / 255.0; });
  return out;
}

// ---------------------------------------------------------------------------
// PPM

class PpmHeaderReader {
 public:
  explicit PpmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  long next_number() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw Error(ErrorCode::MalformedFile, "PPM header: expected a number");
    }
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000L) {
        throw Error(ErrorCode::MalformedFile, "PPM header: number too large");
      }
      ++pos_;
    }
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw Error(ErrorCode::MalformedFile, "PPM header: missing separator before raster");
    }
    return pos_ + 1;
  }

  void skip(std::size_t n) { pos_ += n; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

ImageTensor decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw Error(ErrorCode::MalformedFile, "not a PPM file");
  }
  if (bytes[1] != '6') {
    throw Error(ErrorCode::UnsupportedFormat,
                std::string("only binary P6 PPM is supported, got P") + static_cast<char>(bytes[1]));
  }
  PpmHeaderReader reader(bytes);
  reader.skip(2);
  const long width = reader.next_number();
  const long height = reader.next_number();
  const long maxval = reader.next_number();
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::MalformedFile, "PPM header: zero dimension");
  }
  if (maxval != 255) {
    throw Error(ErrorCode::UnsupportedFormat,
                "PPM maxval " + std::to_string(maxval) + " (only 255 is supported)");
  }
  const std::size_t offset = reader.raster_offset();
  const std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3;
  if (bytes.size() < offset || bytes.size() - offset < need) {
    throw Error(ErrorCode::MalformedFile, "PPM raster truncated");
  }
  return ImageTensor(static_cast<int>(height), static_cast<int>(width),
                     bytes_to_unit(bytes.subspan(offset, need)));
}

// ---------------------------------------------------------------------------
// PNG (libpng classic API). libpng reports errors via longjmp, so everything
// touched after setjmp lives in a heap-allocated state block.

struct PngReadState {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
  std::string error;
  bool unsupported = false;
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  std::vector<std::uint8_t> raster;
  std::vector<png_bytep> rows;
};

void png_read_from_state(png_structp png, png_bytep out, png_size_t length) {
  auto* state = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (state->bytes.size() - state->pos < length) {
    png_error(png, "unexpected end of data");
  }
  std::memcpy(out, state->bytes.data() + state->pos, length);
  state->pos += length;
}

void png_error_to_state(png_structp png, png_const_charp message) {
  auto* state = static_cast<PngReadState*>(png_get_error_ptr(png));
  state->error = message;
  png_longjmp(png, 1);
}

void png_ignore_warning(png_structp, png_const_charp) {}

// Returns false on any libpng error; details are left in `state`.
bool run_png_decode(PngReadState* state) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, state, png_error_to_state,
                                           png_ignore_warning);
  if (png == nullptr) {
    state->error = "png_create_read_struct failed";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    state->error = "png_create_info_struct failed";
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }

  png_set_read_fn(png, state, png_read_from_state);
  png_read_info(png, info);

  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (bit_depth == 16) {
    state->unsupported = true;
    png_error(png, "16-bit PNG is not supported");
  }
  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(png);
  }
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  if ((color_type & PNG_COLOR_MASK_ALPHA) || png_get_valid(png, info, PNG_INFO_tRNS)) {
    png_set_strip_alpha(png);
  }
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  state->width = png_get_image_width(png, info);
  state->height = png_get_image_height(png, info);
  const png_size_t rowbytes = png_get_rowbytes(png, info);
  if (rowbytes != static_cast<png_size_t>(state->width) * 3) {
    state->unsupported = true;
    png_error(png, "PNG does not expand to 8-bit RGB");
  }
  state->raster.resize(rowbytes * state->height);
  state->rows.resize(state->height);
  for (png_uint_32 y = 0; y < state->height; ++y) {
    state->rows[y] = state->raster.data() + y * rowbytes;
  }
  png_read_image(png, state->rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

ImageTensor decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(ErrorCode::MalformedFile, "bad PNG signature");
  }
  auto state = std::make_unique<PngReadState>();
  state->bytes = bytes;
  if (!run_png_decode(state.get())) {
    throw Error(state->unsupported ? ErrorCode::UnsupportedFormat : ErrorCode::MalformedFile,
                "PNG: " + state->error);
  }
  if (state->width == 0 || state->height == 0) {
    throw Error(ErrorCode::MalformedFile, "PNG: zero dimension");
  }
  return ImageTensor(static_cast<int>(state->height), static_cast<int>(state->width),
                     bytes_to_unit(state->raster));
}

}  // namespace

ImageFormat detect_format(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 8 && std::equal(std::begin(kPngSignature), std::end(kPngSignature), bytes.begin())) {
    return ImageFormat::Png;
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] >= '1' && bytes[1] <= '7') {
    return ImageFormat::Ppm;
  }
  throw Error(ErrorCode::UnsupportedFormat, "unrecognized image signature");
}

ImageTensor decode_image(std::span<const std::uint8_t> bytes, ImageFormat format) {
  switch (format) {
    case ImageFormat::Png: return decode_png(bytes);
    case ImageFormat::Ppm: return decode_ppm(bytes);
  }
  throw Error(ErrorCode::UnsupportedFormat, "unknown format");
}

ImageTensor decode_image(std::span<const std::uint8_t> bytes) {
  return decode_image(bytes, detect_format(bytes));
}

std::vector<std::uint8_t> encode_ppm(const ImageTensor& img) {
  const std::string header =
      "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + img.data().size());
  for (double v : img.data()) {
    out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw Error(ErrorCode::IoFailure, "read error on " + path.string());
  }
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(ErrorCode::IoFailure, "write error on " + path.string());
  }
}

ImageTensor read_image(const std::filesystem::path& path) {
  return decode_image(read_file_bytes(path));
}

void write_ppm(const std::filesystem::path& path, const ImageTensor& img) {
  write_file_bytes(path, encode_ppm(img));
}

ImageTensor resize_bilinear(const ImageTensor& img, int target_h, int target_w) {
  if (target_h < 1 || target_w < 1) {
    throw Error(ErrorCode::InvalidArgument, "resize target must be at least 1x1");
  }
  if (target_h == img.height() && target_w == img.width()) {
    return img;
  }

  // Clamped so rounding never leaves the [min(a,b), max(a,b)] interval.
  auto lerp = [](double a, double b, double t) {
    return std::clamp((1.0 - t) * a + t * b, std::min(a, b), std::max(a, b));
  };

  struct Tap {
    int lo;
    int hi;
    double frac;
  };
  auto taps = [](int src, int dst) {
    std::vector<Tap> out(static_cast<std::size_t>(dst));
    const double scale = static_cast<double>(src) / static_cast<double>(dst);
    for (int i = 0; i < dst; ++i) {
      double s = (static_cast<double>(i) + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(src - 1));
      const int lo = static_cast<int>(std::floor(s));
      out[static_cast<std::size_t>(i)] = {lo, std::min(lo + 1, src - 1), s - lo};
    }
    return out;
  };
  const auto ty = taps(img.height(), target_h);
  const auto tx = taps(img.width(), target_w);

  std::vector<double> out(static_cast<std::size_t>(target_h) * static_cast<std::size_t>(target_w) * 3);
  std::size_t k = 0;
  for (int y = 0; y < target_h; ++y) {
    const Tap& vy = ty[static_cast<std::size_t>(y)];
    for (int x = 0; x < target_w; ++x) {
      const Tap& vx = tx[static_cast<std::size_t>(x)];
      for (int c = 0; c < 3; ++c) {
        const double top = lerp(img.at(vy.lo, vx.lo, c), img.at(vy.lo, vx.hi, c), vx.frac);
        const double bot = lerp(img.at(vy.hi, vx.lo, c), img.at(vy.hi, vx.hi, c), vx.frac);
        out[k++] = lerp(top, bot, vy.frac);
      }
    }
  }
  return ImageTensor(target_h, target_w, std::move(out));
}

}  // namespace uicq
