/*
 * Copyright 2026 The SAL Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "sal/png_writer.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "sal/status.h"

namespace sal {

void RgbImage::set(int r, int c, std::uint8_t red, std::uint8_t green, std::uint8_t blue) {
  if (r < 0 || c < 0 || r >= height || c >= width) return;
  auto* p = pixels.data() + (static_cast<std::size_t>(r) * width + c) * 3;
  p[0] = red;
  p[1] = green;
  p[2] = blue;
}

void write_png(const std::filesystem::path& path, const RgbImage& img) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  check(fp != nullptr, ErrorCode::kIoError, "cannot open " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::kIoError, "libpng failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < img.height; ++r) {
    png_write_row(png, img.pixels.data() + static_cast<std::size_t>(r) * img.width * 3);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

ImageTensor read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  check(png_image_begin_read_from_file(&image, path.c_str()) != 0, ErrorCode::kIoError,
        "cannot read PNG " + path.string());
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr) == 0) {
    png_image_free(&image);
    fail(ErrorCode::kIoError, "cannot decode PNG " + path.string());
  }
  ImageTensor out(static_cast<int>(image.height), static_cast<int>(image.width), 3);
  std::copy(buf.begin(), buf.end(), out.data().begin());
  return out;
}

namespace {

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

void paste(RgbImage& dst, const RgbImage& src, int top, int left, int scale) {
  for (int r = 0; r < src.height * scale; ++r) {
    for (int c = 0; c < src.width * scale; ++c) {
      const auto* p = src.pixels.data() + (static_cast<std::size_t>(r / scale) * src.width + c / scale) * 3;
      dst.set(top + r, left + c, p[0], p[1], p[2]);
    }
  }
}

// Outline of rows [top, bottom) x cols [left, right) in source pixels.
void outline(RgbImage& dst, int off_c, int scale, int top, int left, int bottom, int right,
             std::uint8_t red, std::uint8_t green, std::uint8_t blue) {
  const int r0 = top * scale;
  const int r1 = bottom * scale - 1;
  const int c0 = off_c + left * scale;
  const int c1 = off_c + right * scale - 1;
  for (int c = c0; c <= c1; ++c) {
    dst.set(r0, c, red, green, blue);
    dst.set(r1, c, red, green, blue);
  }
  for (int r = r0; r <= r1; ++r) {
    dst.set(r, c0, red, green, blue);
    dst.set(r, c1, red, green, blue);
  }
}

// Blue -> green -> red ramp.
void heat(double t, double* rgb) {
  t = std::clamp(t, 0.0, 1.0);
  rgb[0] = 255.0 * std::clamp(2.0 * t - 1.0, 0.0, 1.0);
  rgb[1] = 255.0 * (1.0 - std::abs(2.0 * t - 1.0));
  rgb[2] = 255.0 * std::clamp(1.0 - 2.0 * t, 0.0, 1.0);
}

}  // namespace

RgbImage to_rgb(const ImageTensor& img) {
  check(img.channels() == 3, ErrorCode::kInvalidInput, "expected a 3-channel image");
  RgbImage out(img.height(), img.width());
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      out.set(r, c, to_byte(img.at(r, c, 0)), to_byte(img.at(r, c, 1)), to_byte(img.at(r, c, 2)));
    }
  }
  return out;
}

RgbImage four_panel(const ImageTensor& input, const LocalizationResult& res, int scale) {
  const int h = input.height();
  const int w = input.width();
  const int gap = 4;
  const int panel = w * scale;
  const int crop_h = res.crop.height() * scale;
  RgbImage out(std::max(h * scale, crop_h), 4 * panel + 3 * gap);
  std::fill(out.pixels.begin(), out.pixels.end(), std::uint8_t{255});

  const RgbImage base = to_rgb(input);
  paste(out, base, 0, 0, scale);
  const auto& win = res.window;
  outline(out, 0, scale, win.top(), win.left(), win.bottom() + 1, win.right() + 1, 255, 230, 0);

  RgbImage overlay(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double rgb[3];
      heat(res.attention.at(r, c), rgb);
      const auto* p = base.pixels.data() + (static_cast<std::size_t>(r) * w + c) * 3;
      overlay.set(r, c, to_byte(0.4 * p[0] + 0.6 * rgb[0]), to_byte(0.4 * p[1] + 0.6 * rgb[1]),
                  to_byte(0.4 * p[2] + 0.6 * rgb[2]));
    }
  }
  paste(out, overlay, 0, panel + gap, scale);

  RgbImage mask(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::uint8_t v = res.cleaned.at(r, c) ? 255 : 0;
      mask.set(r, c, v, v, v);
    }
  }
  const int mask_left = 2 * (panel + gap);
  paste(out, mask, 0, mask_left, scale);
  outline(out, mask_left, scale, res.box.top, res.box.left, res.box.bottom(), res.box.right(), 230, 30, 30);

  paste(out, to_rgb(res.crop), 0, 3 * (panel + gap), scale);
  return out;
}

}  // namespace sal
