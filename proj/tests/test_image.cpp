#include <png.h>

#include <algorithm>
#include <random>

#include "doctest.h"
#include "uicq/error.hpp"
#include "uicq/image.hpp"

using namespace uicq;

namespace {

std::vector<std::uint8_t> ppm_bytes(int w, int h, std::vector<std::uint8_t> raster) {
  const std::string header = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), raster.begin(), raster.end());
  return out;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return ErrorCode::InvalidArgument;
}

// Encodes an 8-bit PNG with libpng's simplified writer.
std::vector<std::uint8_t> png_bytes(int w, int h, png_uint_32 format, const std::vector<std::uint8_t>& pixels) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = format;
  png_alloc_size_t size = 0;
  REQUIRE(png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data(), 0, nullptr));
  std::vector<std::uint8_t> out(size);
  REQUIRE(png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data(), 0, nullptr));
  out.resize(size);
  return out;
}

}  // namespace

TEST_CASE("decode a 1x1 red PPM") {
  const ImageTensor img = decode_image(ppm_bytes(1, 1, {255, 0, 0}), ImageFormat::Ppm);
  CHECK(img.height() == 1);
  CHECK(img.width() == 1);
  CHECK(img.channels() == 3);
  CHECK(std::vector<double>(img.data().begin(), img.data().end()) == std::vector<double>{1.0, 0.0, 0.0});
}

TEST_CASE("decode a 2x1 black/white PPM") {
  const ImageTensor img = decode_image(ppm_bytes(2, 1, {0, 0, 0, 255, 255, 255}));
  CHECK(std::vector<double>(img.data().begin(), img.data().end()) ==
        std::vector<double>{0, 0, 0, 1, 1, 1});
}

TEST_CASE("PPM header comments are skipped") {
  const std::string text = "P6\n# made by hand\n1 # width\n1\n255\n";
  std::vector<std::uint8_t> bytes(text.begin(), text.end());
  bytes.insert(bytes.end(), {10, 20, 30});
  const ImageTensor img = decode_image(bytes);
  CHECK(img.at(0, 0, 2) == doctest::Approx(30.0 / 255.0));
}

TEST_CASE("malformed and unsupported PPM") {
  SUBCASE("truncated body") {
    CHECK(code_of([] { decode_image(ppm_bytes(2, 2, {1, 2, 3})); }) == ErrorCode::MalformedFile);
  }
  SUBCASE("truncated header") {
    const std::string t = "P6\n4";
    CHECK(code_of([&] { decode_image(std::vector<std::uint8_t>(t.begin(), t.end())); }) ==
          ErrorCode::MalformedFile);
  }
  SUBCASE("16-bit maxval") {
    const std::string t = "P6\n1 1\n65535\n";
    std::vector<std::uint8_t> b(t.begin(), t.end());
    b.resize(b.size() + 6, 0);
    CHECK(code_of([&] { decode_image(b); }) == ErrorCode::UnsupportedFormat);
  }
  SUBCASE("ASCII P3") {
    const std::string t = "P3\n1 1\n255\n0 0 0\n";
    CHECK(code_of([&] { decode_image(std::vector<std::uint8_t>(t.begin(), t.end())); }) ==
          ErrorCode::UnsupportedFormat);
  }
  SUBCASE("unknown signature") {
    const std::vector<std::uint8_t> b = {'G', 'I', 'F', '8'};
    CHECK(code_of([&] { decode_image(b); }) == ErrorCode::UnsupportedFormat);
  }
}

TEST_CASE("PPM encode/decode round-trip is byte exact") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = 1 + static_cast<int>(rng() % 17);
    const int h = 1 + static_cast<int>(rng() % 17);
    std::vector<std::uint8_t> raster(static_cast<std::size_t>(w * h * 3));
    for (auto& b : raster) b = static_cast<std::uint8_t>(rng());
    const auto bytes = ppm_bytes(w, h, raster);
    CHECK(encode_ppm(decode_image(bytes)) == bytes);
  }
}

TEST_CASE("PNG decoding") {
  SUBCASE("RGB") {
    const auto png = png_bytes(2, 1, PNG_FORMAT_RGB, {255, 0, 0, 0, 128, 255});
    const ImageTensor img = decode_image(png);
    CHECK(img.width() == 2);
    CHECK(img.at(0, 0, 0) == 1.0);
    CHECK(img.at(0, 1, 1) == 128.0 / 255.0);
    CHECK(img.at(0, 1, 2) == 1.0);
  }
  SUBCASE("RGBA drops alpha without compositing") {
    const auto png = png_bytes(1, 1, PNG_FORMAT_RGBA, {200, 100, 50, 0});
    const ImageTensor img = decode_image(png);
    CHECK(img.at(0, 0, 0) == 200.0 / 255.0);
    CHECK(img.at(0, 0, 1) == 100.0 / 255.0);
    CHECK(img.at(0, 0, 2) == 50.0 / 255.0);
  }
  SUBCASE("gray expands to three equal channels") {
    const auto png = png_bytes(1, 1, PNG_FORMAT_GRAY, {77});
    const ImageTensor img = decode_image(png);
    CHECK(img.at(0, 0, 0) == 77.0 / 255.0);
    CHECK(img.at(0, 0, 1) == 77.0 / 255.0);
    CHECK(img.at(0, 0, 2) == 77.0 / 255.0);
  }
  SUBCASE("16-bit is unsupported") {
    std::vector<std::uint16_t> px = {65535, 0, 0};
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = 1;
    image.height = 1;
    image.format = PNG_FORMAT_LINEAR_RGB;
    png_alloc_size_t size = 0;
    REQUIRE(png_image_write_to_memory(&image, nullptr, &size, 0, px.data(), 0, nullptr));
    std::vector<std::uint8_t> out(size);
    REQUIRE(png_image_write_to_memory(&image, out.data(), &size, 0, px.data(), 0, nullptr));
    CHECK(code_of([&] { decode_image(out); }) == ErrorCode::UnsupportedFormat);
  }
  SUBCASE("truncated PNG is malformed") {
    auto png = png_bytes(4, 4, PNG_FORMAT_RGB, std::vector<std::uint8_t>(48, 9));
    png.resize(png.size() / 2);
    CHECK(code_of([&] { decode_image(png); }) == ErrorCode::MalformedFile);
  }
}

TEST_CASE("ImageTensor rejects bad data") {
  CHECK(code_of([] { ImageTensor(2, 2, std::vector<double>(11, 0.0)); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { ImageTensor(1, 1, std::vector<double>{0.0, 1.5, 0.0}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { ImageTensor(0, 1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("resize_bilinear examples") {
  SUBCASE("constant stays constant") {
    const ImageTensor img(5, 7, 0.2, 0.4, 0.6);
    for (auto [h, w] : {std::pair{1, 1}, {3, 11}, {64, 64}, {5, 2}}) {
      const ImageTensor out = resize_bilinear(img, h, w);
      REQUIRE(out.height() == h);
      REQUIRE(out.width() == w);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          CHECK(out.at(y, x, 0) == 0.2);
          CHECK(out.at(y, x, 1) == 0.4);
          CHECK(out.at(y, x, 2) == 0.6);
        }
    }
  }
  SUBCASE("same size is bitwise identity") {
    std::mt19937_64 rng(5);
    std::vector<double> px(6 * 9 * 3);
    for (double& v : px) v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const ImageTensor img(6, 9, px);
    CHECK(resize_bilinear(img, 6, 9) == img);
  }
  SUBCASE("2x2 checker to 1x1 averages all four") {
    ImageTensor img(2, 2);
    img.set_pixel(0, 1, 1, 1, 1);
    img.set_pixel(1, 0, 1, 1, 1);
    const ImageTensor out = resize_bilinear(img, 1, 1);
    CHECK(out.at(0, 0, 0) == 0.5);
    CHECK(out.at(0, 0, 1) == 0.5);
    CHECK(out.at(0, 0, 2) == 0.5);
  }
  SUBCASE("bad target") {
    CHECK(code_of([] { resize_bilinear(ImageTensor(2, 2), 0, 3); }) == ErrorCode::InvalidArgument);
  }
}

TEST_CASE("resize output stays inside the per-channel input range") {
  std::mt19937_64 rng(11);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (int trial = 0; trial < 25; ++trial) {
    const int h = 1 + static_cast<int>(rng() % 12), w = 1 + static_cast<int>(rng() % 12);
    std::vector<double> px(static_cast<std::size_t>(h * w * 3));
    for (double& v : px) v = unit();
    const ImageTensor img(h, w, px);
    const int th = 1 + static_cast<int>(rng() % 30), tw = 1 + static_cast<int>(rng() % 30);
    const ImageTensor out = resize_bilinear(img, th, tw);
    for (int c = 0; c < 3; ++c) {
      double lo = 1.0, hi = 0.0, olo = 1.0, ohi = 0.0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) lo = std::min(lo, img.at(y, x, c)), hi = std::max(hi, img.at(y, x, c));
      for (int y = 0; y < th; ++y)
        for (int x = 0; x < tw; ++x) olo = std::min(olo, out.at(y, x, c)), ohi = std::max(ohi, out.at(y, x, c));
      CHECK(olo >= lo);
      CHECK(ohi <= hi);
    }
  }
}
