#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "stego/error.hpp"
#include "stego/rng.hpp"
#include "stego/tensor.hpp"

namespace stego {

// ============================================================================
//  Image types
// ============================================================================

// Normalized image: values in [0,1], channel-major then row-major ([C,H,W]).
struct RasterImage {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> pixels;

  double& at(int c, int y, int x) {
    return pixels[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return pixels[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

// 8-bit image in the same layout; used where bit semantics must stay exact.
struct Image8 {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;
};

inline Image8 quantize_to_bytes(const RasterImage& img) {
  Image8 out;
  out.channels = img.channels;
  out.height = img.height;
  out.width = img.width;
  out.pixels.resize(img.pixels.size());
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const double q = std::round(img.pixels[i] * 255.0);
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
  }
  return out;
}

inline RasterImage normalize_bytes(const Image8& img) {
  RasterImage out;
  out.channels = img.channels;
  out.height = img.height;
  out.width = img.width;
  out.pixels.resize(img.pixels.size());
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    out.pixels[i] = static_cast<double>(img.pixels[i]) / 255.0;
  return out;
}

template <typename S>
Tensor<S> to_tensor(const RasterImage& img) {
  Tensor<S> t(Shape{static_cast<std::size_t>(img.channels),
                    static_cast<std::size_t>(img.height),
                    static_cast<std::size_t>(img.width)});
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    t.data[i] = static_cast<S>(img.pixels[i]);
  return t;
}

template <typename S>
RasterImage raster_from_tensor(const Tensor<S>& t) {
  if (t.rank() != 3)
    fail(Error::Kind::shape_mismatch,
         "raster_from_tensor: expected rank-3 tensor, got " +
             shape_str(t.shape));
  RasterImage img;
  img.channels = static_cast<int>(t.shape[0]);
  img.height = static_cast<int>(t.shape[1]);
  img.width = static_cast<int>(t.shape[2]);
  img.pixels.resize(t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    img.pixels[i] = std::clamp(static_cast<double>(t.data[i]), 0.0, 1.0);
  return img;
}

// ============================================================================
//  PNG I/O (libpng)
// ============================================================================

namespace detail {

struct PngReadGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngReadGuard() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

struct PngWriteGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngWriteGuard() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }
};

}  // namespace detail

// Accepts 8-bit grayscale/RGB/palette PNGs (alpha stripped) plus 1-bit
// grayscale; everything else is rejected. 1-bit pixels expand to 0/255.
inline Image8 load_png8(const std::string& path) {
  detail::PngReadGuard g;
  g.fp = std::fopen(path.c_str(), "rb");
  if (!g.fp) fail(Error::Kind::io, "load_png: cannot open " + path);
  g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                 nullptr);
  if (!g.png) fail(Error::Kind::io, "load_png: libpng init failed");
  g.info = png_create_info_struct(g.png);
  if (!g.info) fail(Error::Kind::io, "load_png: libpng init failed");
  if (setjmp(png_jmpbuf(g.png)))
    fail(Error::Kind::format, "load_png: " + path + " is not a valid PNG");

  png_init_io(g.png, g.fp);
  png_read_info(g.png, g.info);
  const int bit_depth = png_get_bit_depth(g.png, g.info);
  const int color_type = png_get_color_type(g.png, g.info);
  if (bit_depth == 16)
    fail(Error::Kind::format,
         "load_png: " + path + ": 16-bit PNG is unsupported (8-bit only)");
  if (bit_depth != 8 &&
      !(bit_depth == 1 && color_type == PNG_COLOR_TYPE_GRAY))
    fail(Error::Kind::format,
         "load_png: " + path + ": unsupported bit depth " +
             std::to_string(bit_depth));

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(g.png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(g.png);
  if (png_get_valid(g.png, g.info, PNG_INFO_tRNS))
    png_set_tRNS_to_alpha(g.png);
  if (color_type & PNG_COLOR_MASK_ALPHA ||
      png_get_valid(g.png, g.info, PNG_INFO_tRNS))
    png_set_strip_alpha(g.png);
  png_set_interlace_handling(g.png);
  png_read_update_info(g.png, g.info);

  const int channels = png_get_channels(g.png, g.info);
  if (channels != 1 && channels != 3)
    fail(Error::Kind::format,
         "load_png: " + path + ": unsupported colour layout (" +
             std::to_string(channels) + " channels)");
  const int h = static_cast<int>(png_get_image_height(g.png, g.info));
  const int w = static_cast<int>(png_get_image_width(g.png, g.info));

  std::vector<std::uint8_t> interleaved(
      static_cast<std::size_t>(h) * w * channels);
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y)
    rows[static_cast<std::size_t>(y)] =
        interleaved.data() + static_cast<std::size_t>(y) * w * channels;
  png_read_image(g.png, rows.data());
  png_read_end(g.png, nullptr);

  Image8 img;
  img.channels = channels;
  img.height = h;
  img.width = w;
  img.pixels.resize(interleaved.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        img.pixels[(static_cast<std::size_t>(c) * h + y) * w + x] =
            interleaved[(static_cast<std::size_t>(y) * w + x) * channels + c];
  return img;
}

inline RasterImage load_png(const std::string& path) {
  return normalize_bytes(load_png8(path));
}

// Writes 8-bit grayscale or RGB. With one_bit=true (single channel, values
// limited to 0 and 255) the file is written at bit depth 1.
inline void save_png(const Image8& img, const std::string& path,
                     bool one_bit = false) {
  if (img.channels != 1 && img.channels != 3)
    fail(Error::Kind::invalid_argument,
         "save_png: image must have 1 or 3 channels");
  if (one_bit && img.channels != 1)
    fail(Error::Kind::invalid_argument,
         "save_png: 1-bit output requires a single channel");
  detail::PngWriteGuard g;
  g.fp = std::fopen(path.c_str(), "wb");
  if (!g.fp) fail(Error::Kind::io, "save_png: cannot open " + path);
  g.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                  nullptr);
  if (!g.png) fail(Error::Kind::io, "save_png: libpng init failed");
  g.info = png_create_info_struct(g.png);
  if (!g.info) fail(Error::Kind::io, "save_png: libpng init failed");
  if (setjmp(png_jmpbuf(g.png)))
    fail(Error::Kind::io, "save_png: write failure on " + path);

  png_init_io(g.png, g.fp);
  const int color_type =
      img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(g.png, g.info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), one_bit ? 1 : 8,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(g.png, g.info);

  const int h = img.height, w = img.width, ch = img.channels;
  if (one_bit) {
    const std::size_t rowbytes = (static_cast<std::size_t>(w) + 7) / 8;
    std::vector<std::uint8_t> row(rowbytes);
    for (int y = 0; y < h; ++y) {
      std::fill(row.begin(), row.end(), 0);
      for (int x = 0; x < w; ++x) {
        const std::uint8_t v =
            img.pixels[static_cast<std::size_t>(y) * w + x];
        if (v != 0 && v != 255)
          fail(Error::Kind::invalid_argument,
               "save_png: 1-bit output requires binary pixel values");
        if (v) row[static_cast<std::size_t>(x) / 8] |=
            static_cast<std::uint8_t>(0x80u >> (x % 8));
      }
      png_write_row(g.png, row.data());
    }
  } else {
    std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * ch);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < ch; ++c)
          row[(static_cast<std::size_t>(x)) * ch + c] =
              img.pixels[(static_cast<std::size_t>(c) * h + y) * w + x];
      png_write_row(g.png, row.data());
    }
  }
  png_write_end(g.png, nullptr);
}

// Quantizes with round(v*255), clamped.
inline void save_png(const RasterImage& img, const std::string& path) {
  save_png(quantize_to_bytes(img), path);
}

// Sorted-by-filename PNG listing; the corpus traversal order.
inline std::vector<std::string> list_png_files(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    fail(Error::Kind::io, "cover directory not found: " + dir);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".png")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  return files;
}

// ============================================================================
//  Preprocessing
// ============================================================================

// Luma conversion (0.299 R + 0.587 G + 0.114 B); single-channel input passes
// through unchanged.
inline RasterImage to_grayscale(const RasterImage& img) {
  if (img.channels == 1) return img;
  if (img.channels != 3)
    fail(Error::Kind::invalid_argument,
         "to_grayscale: expected 1 or 3 channels");
  RasterImage out;
  out.channels = 1;
  out.height = img.height;
  out.width = img.width;
  out.pixels.resize(static_cast<std::size_t>(img.height) * img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double v = 0.299 * img.at(0, y, x) + 0.587 * img.at(1, y, x) +
                       0.114 * img.at(2, y, x);
      out.pixels[static_cast<std::size_t>(y) * img.width + x] =
          std::clamp(v, 0.0, 1.0);
    }
  return out;
}

// Bilinear resampling with half-pixel-center alignment; resizing to the
// same size is the identity and constants stay constant.
inline RasterImage bilinear_resize(const RasterImage& img, int out_h,
                                   int out_w) {
  if (out_h < 1 || out_w < 1)
    fail(Error::Kind::invalid_argument, "resize: output dims must be positive");
  RasterImage out;
  out.channels = img.channels;
  out.height = out_h;
  out.width = out_w;
  out.pixels.resize(static_cast<std::size_t>(img.channels) * out_h * out_w);
  const double sy = static_cast<double>(img.height) / out_h;
  const double sx = static_cast<double>(img.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < img.channels; ++c) {
        const double top =
            img.at(c, y0, x0) * (1.0 - wx) + img.at(c, y0, x1) * wx;
        const double bot =
            img.at(c, y1, x0) * (1.0 - wx) + img.at(c, y1, x1) * wx;
        out.pixels[(static_cast<std::size_t>(c) * out_h + y) * out_w + x] =
            std::clamp(top * (1.0 - wy) + bot * wy, 0.0, 1.0);
      }
    }
  }
  return out;
}

// Uniformly random crop (top offset drawn first, then left), then bilinear
// resize to out x out.
inline RasterImage random_crop_resize(const RasterImage& img, int crop,
                                      int out, SplitMix64& rng) {
  if (img.height < crop || img.width < crop)
    fail(Error::Kind::invalid_argument,
         "random_crop_resize: image " + std::to_string(img.width) + "x" +
             std::to_string(img.height) + " smaller than crop " +
             std::to_string(crop));
  const int dy = static_cast<int>(
      rng.next_below(static_cast<std::uint64_t>(img.height - crop + 1)));
  const int dx = static_cast<int>(
      rng.next_below(static_cast<std::uint64_t>(img.width - crop + 1)));
  RasterImage patch;
  patch.channels = img.channels;
  patch.height = crop;
  patch.width = crop;
  patch.pixels.resize(static_cast<std::size_t>(img.channels) * crop * crop);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < crop; ++y)
      for (int x = 0; x < crop; ++x)
        patch.pixels[(static_cast<std::size_t>(c) * crop + y) * crop + x] =
            img.at(c, dy + y, dx + x);
  if (crop == out) return patch;
  return bilinear_resize(patch, out, out);
}

// ============================================================================
//  Synthetic covers
// ============================================================================

// Smooth everyday-ish stand-in: a few random cosine plane waves per channel
// around mid-gray, clamped to [0,1].
inline RasterImage synthetic_cover(int height, int width, int channels,
                                   SplitMix64& rng) {
  RasterImage img;
  img.channels = channels;
  img.height = height;
  img.width = width;
  img.pixels.assign(
      static_cast<std::size_t>(channels) * height * width, 0.0);
  constexpr double kTau = 6.28318530717958647692;
  for (int c = 0; c < channels; ++c) {
    const double base = 0.35 + 0.3 * rng.next_unit();
    struct Wave {
      double fy, fx, phase, amp;
    };
    Wave waves[3];
    for (auto& wv : waves) {
      wv.fy = 1.0 + rng.next_below(4);
      wv.fx = 1.0 + rng.next_below(4);
      wv.phase = kTau * rng.next_unit();
      wv.amp = 0.05 + 0.13 * rng.next_unit();
    }
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        double v = base;
        for (const auto& wv : waves)
          v += wv.amp * std::cos(kTau * (wv.fy * y / height +
                                         wv.fx * x / width) +
                                 wv.phase);
        img.pixels[(static_cast<std::size_t>(c) * height + y) * width + x] =
            std::clamp(v, 0.0, 1.0);
      }
  }
  return img;
}

}  // namespace stego
