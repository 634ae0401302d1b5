#pragma once

// 8-bit RGB images plus PNG (libpng) and uncompressed BMP codecs.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <png.h>

#include "ledger/errors.hpp"

namespace ledger {

struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  Image() = default;
  Image(std::size_t w, std::size_t h, std::uint8_t fill = 0) : width(w), height(h), rgb(w * h * 3, fill) {}

  std::uint8_t& at(std::size_t y, std::size_t x, int c) { return rgb[(y * width + x) * 3 + c]; }
  std::uint8_t at(std::size_t y, std::size_t x, int c) const { return rgb[(y * width + x) * 3 + c]; }

  bool operator==(const Image&) const = default;
};

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageDecodeError("cannot open image " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Image decode_png(const std::vector<std::uint8_t>& bytes) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw ImageDecodeError(std::string("PNG decode failed: ") + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  Image out(img.width, img.height);
  if (!png_image_finish_read(&img, nullptr, out.rgb.data(), 0, nullptr)) {
    png_image_free(&img);
    throw ImageDecodeError(std::string("PNG decode failed: ") + img.message);
  }
  return out;
}

inline std::vector<std::uint8_t> encode_png(const Image& image) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(img, size, 0, image.rgb.data(), 0, nullptr)) {
    throw Error(std::string("PNG encode failed: ") + img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.rgb.data(), 0, nullptr)) {
    throw Error(std::string("PNG encode failed: ") + img.message);
  }
  out.resize(size);
  return out;
}

namespace detail {

inline std::uint32_t le32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
         (static_cast<std::uint32_t>(b[off + 2]) << 16) | (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

inline std::uint16_t le16(const std::vector<std::uint8_t>& b, std::size_t off) {
  return static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8));
}

}  // namespace detail

// Uncompressed 24- and 32-bit BMP (BI_RGB, and BI_BITFIELDS with the usual
// BGRA masks). Palette and RLE variants are rejected.
inline Image decode_bmp(const std::vector<std::uint8_t>& b) {
  if (b.size() < 54 || b[0] != 'B' || b[1] != 'M') throw ImageDecodeError("not a BMP file");
  const std::uint32_t data_offset = detail::le32(b, 10);
  const auto width = static_cast<std::int32_t>(detail::le32(b, 18));
  const auto raw_height = static_cast<std::int32_t>(detail::le32(b, 22));
  const std::uint16_t bpp = detail::le16(b, 28);
  const std::uint32_t compression = detail::le32(b, 30);
  if (width <= 0 || raw_height == 0) throw ImageDecodeError("BMP has empty dimensions");
  if (bpp != 24 && bpp != 32) throw ImageDecodeError("unsupported BMP bit depth " + std::to_string(bpp));
  if (compression != 0 && !(compression == 3 && bpp == 32)) {
    throw ImageDecodeError("compressed BMP is not supported");
  }
  const bool bottom_up = raw_height > 0;
  const std::size_t w = static_cast<std::size_t>(width);
  const std::size_t h = static_cast<std::size_t>(bottom_up ? raw_height : -raw_height);
  const std::size_t bytes_pp = bpp / 8;
  const std::size_t stride = (w * bytes_pp + 3) & ~std::size_t{3};
  if (data_offset + stride * h > b.size()) throw ImageDecodeError("truncated BMP pixel data");
  Image out(w, h);
  for (std::size_t row = 0; row < h; ++row) {
    const std::size_t y = bottom_up ? h - 1 - row : row;
    const std::size_t base = data_offset + row * stride;
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t p = base + x * bytes_pp;
      out.at(y, x, 0) = b[p + 2];
      out.at(y, x, 1) = b[p + 1];
      out.at(y, x, 2) = b[p];
    }
  }
  return out;
}

inline std::vector<std::uint8_t> encode_bmp(const Image& image) {
  const std::size_t stride = (image.width * 3 + 3) & ~std::size_t{3};
  const std::size_t data_size = stride * image.height;
  std::vector<std::uint8_t> b(54 + data_size, 0);
  auto put32 = [&](std::size_t off, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b[off + i] = static_cast<std::uint8_t>(v >> (8 * i));
  };
  b[0] = 'B';
  b[1] = 'M';
  put32(2, static_cast<std::uint32_t>(b.size()));
  put32(10, 54);
  put32(14, 40);
  put32(18, static_cast<std::uint32_t>(image.width));
  put32(22, static_cast<std::uint32_t>(image.height));
  b[26] = 1;
  b[28] = 24;
  put32(34, static_cast<std::uint32_t>(data_size));
  for (std::size_t y = 0; y < image.height; ++y) {
    const std::size_t base = 54 + (image.height - 1 - y) * stride;
    for (std::size_t x = 0; x < image.width; ++x) {
      b[base + x * 3] = image.at(y, x, 2);
      b[base + x * 3 + 1] = image.at(y, x, 1);
      b[base + x * 3 + 2] = image.at(y, x, 0);
    }
  }
  return b;
}

inline Image decode_image(const std::vector<std::uint8_t>& bytes) {
  static constexpr std::uint8_t kPngMagic[] = {0x89, 'P', 'N', 'G'};
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kPngMagic, 4) == 0) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'B' && bytes[1] == 'M') return decode_bmp(bytes);
  throw ImageDecodeError("unrecognized image format");
}

inline void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace ledger
