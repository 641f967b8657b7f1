#include <zlib.h>

#include <cstdlib>
#include <cstring>

#include "vgs/browser/raster.hpp"
#include "vgs/error.hpp"

namespace vgs::browser {
namespace {

constexpr unsigned char kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v >> 24));
  out.push_back(static_cast<char>(v >> 16));
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v));
}

std::uint32_t get_u32(std::string_view s, std::size_t at) {
  return (std::uint32_t(static_cast<unsigned char>(s[at])) << 24) |
         (std::uint32_t(static_cast<unsigned char>(s[at + 1])) << 16) |
         (std::uint32_t(static_cast<unsigned char>(s[at + 2])) << 8) |
         std::uint32_t(static_cast<unsigned char>(s[at + 3]));
}

void put_chunk(std::string& out, const char type[4], std::string_view payload) {
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  std::string body(type, 4);
  body.append(payload);
  out += body;
  put_u32(out, static_cast<std::uint32_t>(
                   crc32(0, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()))));
}

[[noreturn]] void bad(const std::string& why) { throw Error(ErrorCode::CaptureFailed, "png: " + why); }

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a);
  const int pb = std::abs(p - b);
  const int pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  return pb <= pc ? b : c;
}

}  // namespace

std::string encode_png(const Raster& raster) {
  const auto w = static_cast<std::size_t>(raster.width());
  const auto h = static_cast<std::size_t>(raster.height());
  std::string rows;
  rows.reserve(h * (w * 3 + 1));
  const auto& px = raster.data();
  for (std::size_t y = 0; y < h; ++y) {
    rows.push_back(0);
    rows.append(reinterpret_cast<const char*>(px.data() + y * w * 3), w * 3);
  }
  uLongf packed_size = compressBound(static_cast<uLong>(rows.size()));
  std::string packed(packed_size, '\0');
  if (compress2(reinterpret_cast<Bytef*>(packed.data()), &packed_size,
                reinterpret_cast<const Bytef*>(rows.data()), static_cast<uLong>(rows.size()), 6) != Z_OK) {
    bad("deflate failed");
  }
  packed.resize(packed_size);

  std::string out(reinterpret_cast<const char*>(kSignature), 8);
  std::string ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(w));
  put_u32(ihdr, static_cast<std::uint32_t>(h));
  ihdr += std::string{8, 2, 0, 0, 0};
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", packed);
  put_chunk(out, "IEND", {});
  return out;
}

Raster decode_png(std::string_view bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0) bad("bad signature");
  std::size_t at = 8;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  int color_type = -1;
  std::string idat;
  std::string palette;
  bool ended = false;
  while (at + 12 <= bytes.size()) {
    const std::uint32_t len = get_u32(bytes, at);
    if (at + 12 + len > bytes.size()) bad("truncated chunk");
    const std::string_view type = bytes.substr(at + 4, 4);
    const std::string_view data = bytes.substr(at + 8, len);
    const std::uint32_t crc = get_u32(bytes, at + 8 + len);
    if (crc32(0, reinterpret_cast<const Bytef*>(bytes.data() + at + 4), len + 4) != crc) bad("crc mismatch");
    if (type == "IHDR") {
      if (len != 13) bad("bad IHDR");
      width = get_u32(data, 0);
      height = get_u32(data, 4);
      const int depth = static_cast<unsigned char>(data[8]);
      color_type = static_cast<unsigned char>(data[9]);
      if (depth != 8) bad("only 8-bit depth is supported");
      if (data[12] != 0) bad("interlaced images are not supported");
    } else if (type == "PLTE") {
      palette = std::string(data);
    } else if (type == "IDAT") {
      idat += data;
    } else if (type == "IEND") {
      ended = true;
      break;
    }
    at += 12 + len;
  }
  if (!ended || width == 0 || height == 0) bad("missing IHDR/IEND");
  int channels = 0;
  switch (color_type) {
    case 0: channels = 1; break;
    case 2: channels = 3; break;
    case 3: channels = 1; break;
    case 4: channels = 2; break;
    case 6: channels = 4; break;
    default: bad("unsupported color type");
  }
  if (width > 1u << 15 || height > 1u << 17) bad("image too large");
  const std::size_t stride = width * static_cast<std::size_t>(channels);
  uLongf raw_size = static_cast<uLongf>((stride + 1) * height);
  std::string raw(raw_size, '\0');
  if (uncompress(reinterpret_cast<Bytef*>(raw.data()), &raw_size, reinterpret_cast<const Bytef*>(idat.data()),
                 static_cast<uLong>(idat.size())) != Z_OK ||
      raw_size != raw.size()) {
    bad("inflate failed");
  }

  std::vector<std::uint8_t> cur(stride);
  std::vector<std::uint8_t> prev(stride, 0);
  Raster out(static_cast<int>(width), static_cast<int>(height));
  for (std::size_t y = 0; y < height; ++y) {
    const auto* line = reinterpret_cast<const std::uint8_t*>(raw.data()) + y * (stride + 1);
    const int filter = line[0];
    for (std::size_t i = 0; i < stride; ++i) {
      const int x = line[1 + i];
      const int a = i >= static_cast<std::size_t>(channels) ? cur[i - channels] : 0;
      const int b = prev[i];
      const int c = i >= static_cast<std::size_t>(channels) ? prev[i - channels] : 0;
      int v;
      switch (filter) {
        case 0: v = x; break;
        case 1: v = x + a; break;
        case 2: v = x + b; break;
        case 3: v = x + (a + b) / 2; break;
        case 4: v = x + paeth(a, b, c); break;
        default: bad("bad filter type");
      }
      cur[i] = static_cast<std::uint8_t>(v);
    }
    for (std::size_t xx = 0; xx < width; ++xx) {
      const std::uint8_t* p = cur.data() + xx * channels;
      Rgb color;
      switch (color_type) {
        case 0:
        case 4:
          color = {p[0], p[0], p[0]};
          break;
        case 3: {
          const std::size_t k = static_cast<std::size_t>(p[0]) * 3;
          if (k + 2 >= palette.size()) bad("palette index out of range");
          color = {static_cast<std::uint8_t>(palette[k]), static_cast<std::uint8_t>(palette[k + 1]),
                   static_cast<std::uint8_t>(palette[k + 2])};
          break;
        }
        default:
          color = {p[0], p[1], p[2]};
          break;
      }
      out.set_pixel(static_cast<int>(xx), static_cast<int>(y), color);
    }
    std::swap(cur, prev);
  }
  return out;
}

}  // namespace vgs::browser
