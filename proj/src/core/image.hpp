#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace synthdet {

// Interleaved 8-bit image, channels = 1 (mask/gray) or 3 (RGB).
struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<uint8_t> data;

  Image8() = default;
  Image8(int w, int h, int c, uint8_t fill = 0)
      : width(w), height(h), channels(c),
        data(static_cast<size_t>(w) * h * c, fill) {}

  uint8_t& at(int x, int y, int c) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  uint8_t at(int x, int y, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }

  bool same_shape(const Image8& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }

  bool operator==(const Image8& o) const {
    return same_shape(o) && data == o.data;
  }
};

// Binary PPM (P6, channels == 3) / PGM (P5, channels == 1), maxval 255.
// The only raster formats the toolkit reads and writes; they are lossless
// and byte-stable, which the determinism contract depends on.
void write_image(const Image8& img, const std::string& path);
Image8 read_image(const std::string& path);

uint8_t clamp_to_byte(double v);

}  // namespace synthdet
