#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vgs::browser {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// 8-bit RGB image, row-major.
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, Rgb fill = {255, 255, 255});

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return width_ == 0 || height_ == 0; }

  Rgb pixel(int x, int y) const;
  void set_pixel(int x, int y, Rgb c);  // clipped
  void fill_rect(int x, int y, int w, int h, Rgb c);
  // Outline of `thickness` pixels drawn inside the box.
  void stroke_rect(int x, int y, int w, int h, int thickness, Rgb c);
  // ASCII text in a 5x7 cell font; other code points draw as a hollow box.
  // Each character advances 6*scale pixels.
  void draw_text(int x, int y, std::string_view utf8, Rgb c, int scale = 1);

  Raster crop(int x, int y, int w, int h) const;

  const std::vector<std::uint8_t>& data() const noexcept { return data_; }
  std::vector<std::uint8_t>& data() noexcept { return data_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

inline constexpr int kGlyphWidth = 5;
inline constexpr int kGlyphHeight = 7;

std::string encode_png(const Raster& raster);
// Accepts 8-bit greyscale, RGB, RGBA, grey+alpha and palette images
// (non-interlaced). Throws Error{CaptureFailed} on anything else.
Raster decode_png(std::string_view bytes);

}  // namespace vgs::browser
